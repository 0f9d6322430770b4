#include "preimage/linear_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "preimage/errors.hpp"
#include "preimage/kernels.hpp"

namespace preimage {

ReluRelaxation relax_relu(double l, double u, double alpha) {
    if (!(l <= u)) throw ValidationError("relax_relu: l > u");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ValidationError("relax_relu: alpha outside [0,1]");
    ReluRelaxation r;
    if (u <= 0.0) return r;  // inactive: relu == 0 on [l,u]
    if (l >= 0.0) {          // active: relu == identity
        r.lower_slope = 1.0;
        r.upper_slope = 1.0;
        return r;
    }
    // unstable: chord from (l,0) to (u,u) above, slope-alpha line below
    double s = u / (u - l);
    r.upper_slope = s;
    r.upper_intercept = -l * s;
    r.lower_slope = alpha;
    r.lower_intercept = 0.0;
    return r;
}

std::pair<double, double> concretize(const std::vector<double>& a, double b,
                                     const Hyperrectangle& box) {
    if (a.size() != box.dim()) throw ValidationError("concretize: dimension mismatch");
    double lo = b, hi = b;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] >= 0.0) {
            lo += a[k] * box.lower[k];
            hi += a[k] * box.upper[k];
        } else {
            lo += a[k] * box.upper[k];
            hi += a[k] * box.lower[k];
        }
    }
    return {lo, hi};
}

std::size_t NeuronBounds::count_unstable() const {
    std::size_t n = 0;
    for (std::size_t t = 0; t < lower.size(); ++t)
        for (std::size_t j = 0; j < lower[t].size(); ++j)
            if (unstable(t, j)) ++n;
    return n;
}

void NeuronBounds::validate() const {
    if (lower.size() != upper.size()) throw ValidationError("neuron bounds: layer count mismatch");
    for (std::size_t t = 0; t < lower.size(); ++t) {
        if (lower[t].size() != upper[t].size())
            throw ValidationError("neuron bounds: width mismatch in layer " + std::to_string(t));
        for (std::size_t j = 0; j < lower[t].size(); ++j) {
            if (!std::isfinite(lower[t][j]) || !std::isfinite(upper[t][j]))
                throw ValidationError("neuron bounds: non-finite bound");
            if (lower[t][j] > upper[t][j])
                throw ValidationError("neuron bounds: lower > upper at layer " +
                                      std::to_string(t) + " neuron " + std::to_string(j));
        }
    }
}

double AlphaPolicy::pick(double l, double u) const {
    if (!adaptive) return fixed_value;
    return u >= -l ? 1.0 : 0.0;
}

// ------------------------------------------------------- alpha assignment ---

AlphaAssignment AlphaAssignment::make_default(const Network& net, const NeuronBounds& nb,
                                              std::size_t rows, const AlphaPolicy& policy) {
    AlphaAssignment out;
    out.rows = rows;
    for (std::size_t t = 0; t < net.layers.size(); ++t) {
        if (!net.layers[t].relu) continue;
        for (std::size_t j = 0; j < nb.lower[t].size(); ++j) {
            if (!nb.unstable(t, j)) continue;
            Entry e;
            e.layer = t;
            e.neuron = j;
            e.per_row.assign(rows, policy.pick(nb.lower[t][j], nb.upper[t][j]));
            out.entries.push_back(std::move(e));
        }
    }
    return out;
}

AlphaAssignment AlphaAssignment::zeros_like(const AlphaAssignment& shape) {
    AlphaAssignment out = shape;
    for (Entry& e : out.entries) std::fill(e.per_row.begin(), e.per_row.end(), 0.0);
    return out;
}

const AlphaAssignment::Entry* AlphaAssignment::find(std::size_t layer, std::size_t neuron) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), std::make_pair(layer, neuron),
                               [](const Entry& e, const std::pair<std::size_t, std::size_t>& k) {
                                   return std::make_pair(e.layer, e.neuron) < k;
                               });
    if (it == entries.end() || it->layer != layer || it->neuron != neuron) return nullptr;
    return &*it;
}

void AlphaAssignment::validate_against(const Network& net, const NeuronBounds& nb) const {
    std::size_t expect = 0;
    for (std::size_t t = 0; t < net.layers.size(); ++t) {
        if (!net.layers[t].relu) continue;
        for (std::size_t j = 0; j < nb.lower[t].size(); ++j) {
            if (!nb.unstable(t, j)) continue;
            ++expect;
            const Entry* e = find(t, j);
            if (!e)
                throw ValidationError("alpha assignment: missing key (layer " + std::to_string(t) +
                                      ", neuron " + std::to_string(j) + ")");
            if (e->per_row.size() != rows)
                throw ValidationError("alpha assignment: entry row count mismatch");
            for (double v : e->per_row)
                if (!(v >= 0.0 && v <= 1.0))
                    throw ValidationError("alpha assignment: value outside [0,1]");
        }
    }
    if (entries.size() != expect)
        throw ValidationError("alpha assignment: " + std::to_string(entries.size()) +
                              " keys, unstable set has " + std::to_string(expect));
}

void AlphaAssignment::clamp01() {
    for (Entry& e : entries)
        for (double& v : e.per_row) v = std::clamp(v, 0.0, 1.0);
}

void AlphaAssignment::add_scaled(const AlphaAssignment& g, double scale) {
    if (g.entries.size() != entries.size())
        throw ValidationError("alpha assignment: key structure mismatch in update");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Entry& e = entries[i];
        const Entry& ge = g.entries[i];
        if (ge.layer != e.layer || ge.neuron != e.neuron || ge.per_row.size() != e.per_row.size())
            throw ValidationError("alpha assignment: key structure mismatch in update");
        for (std::size_t r = 0; r < e.per_row.size(); ++r) e.per_row[r] += scale * ge.per_row[r];
    }
}

// ------------------------------------------------------------ propagation ---

namespace {

// Where the lower-envelope slope comes from during a pass.
struct RelaxSource {
    const NeuronBounds* nb = nullptr;
    const AlphaPolicy* policy = nullptr;        // intermediate passes
    const AlphaAssignment* assign = nullptr;    // final (per-row) passes
    std::size_t row = 0;

    ReluRelaxation at(std::size_t layer, std::size_t q) const {
        double l = (*nb).lower[layer][q];
        double u = (*nb).upper[layer][q];
        double alpha = 0.0;
        if (policy) {
            alpha = policy->pick(l, u);
        } else if (l < 0.0 && u > 0.0) {
            const AlphaAssignment::Entry* e = assign->find(layer, q);
            if (!e) throw ValidationError("alpha assignment: missing key during propagation");
            alpha = e->per_row[row];
        }
        return relax_relu(l, u, alpha);
    }
};

// Propagate one coefficient row from the activations of layer `top` down to
// the input. lower_chain selects which envelope a positive coefficient picks.
void propagate_row(const Network& net, int top, std::vector<double> v, double b,
                   bool lower_chain, const RelaxSource& rs, std::vector<double>& a_out,
                   double& b_out, BackwardTape* tape) {
    for (int j = top; j >= 0; --j) {
        const Layer& L = net.layers[static_cast<std::size_t>(j)];
        if (L.relu) {
            BackwardTape::RelaxStep step;
            const bool rec = tape != nullptr;
            if (rec) {
                step.layer = static_cast<std::size_t>(j);
                step.v_pre = v;
                step.slope.resize(v.size());
                step.intercept.resize(v.size());
                step.alpha_used.assign(v.size(), 0);
            }
            for (std::size_t q = 0; q < v.size(); ++q) {
                ReluRelaxation r = rs.at(static_cast<std::size_t>(j), q);
                bool pick_lower = (v[q] >= 0.0) == lower_chain;
                double s = pick_lower ? r.lower_slope : r.upper_slope;
                double c = pick_lower ? r.lower_intercept : r.upper_intercept;
                b += v[q] * c;
                if (rec) {
                    step.slope[q] = s;
                    step.intercept[q] = c;
                    step.alpha_used[q] =
                        pick_lower && rs.nb->unstable(static_cast<std::size_t>(j), q) ? 1 : 0;
                }
                v[q] *= s;
            }
            if (rec) tape->steps.push_back(std::move(step));
        }
        b += kern::dot(v.data(), L.bias.data(), v.size());
        std::vector<double> nv(L.in_dim(), 0.0);
        for (std::size_t q = 0; q < L.out_dim(); ++q)
            kern::axpy(v[q], L.W.row(q), nv.data(), L.in_dim());
        v = std::move(nv);
    }
    a_out = std::move(v);
    b_out = b;
}

}  // namespace

NeuronBounds intermediate_bounds(const Network& net, const Hyperrectangle& box,
                                 const AlphaPolicy& policy) {
    box.validate();
    if (net.layers.empty()) throw ValidationError("intermediate bounds: empty network");
    if (net.input_dim() != box.dim())
        throw ValidationError("intermediate bounds: box/network dimension mismatch");
    NeuronBounds nb;
    nb.lower.resize(net.layers.size());
    nb.upper.resize(net.layers.size());
    RelaxSource rs{&nb, &policy, nullptr, 0};
    for (std::size_t t = 0; t < net.layers.size(); ++t) {
        const Layer& L = net.layers[t];
        if (!L.relu) continue;
        nb.lower[t].resize(L.out_dim());
        nb.upper[t].resize(L.out_dim());
        for (std::size_t q = 0; q < L.out_dim(); ++q) {
            std::vector<double> row(L.W.row(q), L.W.row(q) + L.in_dim());
            std::vector<double> a;
            double b0 = 0.0;
            propagate_row(net, static_cast<int>(t) - 1, row, L.bias[q], true, rs, a, b0, nullptr);
            nb.lower[t][q] = concretize(a, b0, box).first;
            propagate_row(net, static_cast<int>(t) - 1, row, L.bias[q], false, rs, a, b0, nullptr);
            nb.upper[t][q] = concretize(a, b0, box).second;
        }
    }
    nb.validate();
    return nb;
}

void backward_lower_row(const Network& net, std::size_t row, const NeuronBounds& nb,
                        const AlphaAssignment& alpha, std::vector<double>& a_out, double& b_out,
                        BackwardTape* tape) {
    if (row >= net.output_dim()) throw ValidationError("backward row index out of range");
    RelaxSource rs{&nb, nullptr, &alpha, row};
    std::vector<double> v(net.output_dim(), 0.0);
    v[row] = 1.0;
    propagate_row(net, static_cast<int>(net.layers.size()) - 1, std::move(v), 0.0, true, rs,
                  a_out, b_out, tape);
}

namespace {
AffineBound backward_bounds(const Network& net, const NeuronBounds& nb,
                            const AlphaAssignment& alpha, bool lower_chain) {
    const std::size_t rows = net.output_dim();
    if (alpha.rows != rows)
        throw ValidationError("alpha assignment rows != network output rows");
    AffineBound out;
    out.A = Mat(rows, net.input_dim());
    out.b.resize(rows);
    for (std::size_t k = 0; k < rows; ++k) {
        RelaxSource rs{&nb, nullptr, &alpha, k};
        std::vector<double> v(rows, 0.0), a;
        v[k] = 1.0;
        double b0 = 0.0;
        propagate_row(net, static_cast<int>(net.layers.size()) - 1, std::move(v), 0.0,
                      lower_chain, rs, a, b0, nullptr);
        std::copy(a.begin(), a.end(), out.A.row(k));
        out.b[k] = b0;
    }
    return out;
}
}  // namespace

AffineBound backward_lower_bounds(const Network& net, const NeuronBounds& nb,
                                  const AlphaAssignment& alpha) {
    return backward_bounds(net, nb, alpha, true);
}

AffineBound backward_upper_bounds(const Network& net, const NeuronBounds& nb,
                                  const AlphaAssignment& alpha) {
    return backward_bounds(net, nb, alpha, false);
}

void backward_lower_grad(const Network& net, std::size_t row, const BackwardTape& tape,
                         const std::vector<double>& abar, double bbar, AlphaAssignment& grad) {
    std::vector<double> vbar = abar;
    std::size_t step_idx = tape.steps.size();
    for (std::size_t j = 0; j < net.layers.size(); ++j) {
        const Layer& L = net.layers[j];
        // adjoint of the affine crossing at layer j
        std::vector<double> nv(L.out_dim());
        for (std::size_t q = 0; q < L.out_dim(); ++q)
            nv[q] = kern::dot(L.W.row(q), vbar.data(), L.in_dim()) + bbar * L.bias[q];
        vbar = std::move(nv);
        if (L.relu) {
            if (step_idx == 0) throw ValidationError("gradient replay: tape too short");
            const BackwardTape::RelaxStep& st = tape.steps[--step_idx];
            if (st.layer != j) throw ValidationError("gradient replay: tape out of order");
            for (std::size_t q = 0; q < vbar.size(); ++q) {
                if (st.alpha_used[q]) {
                    AlphaAssignment::Entry* e = nullptr;
                    for (AlphaAssignment::Entry& ge : grad.entries) {
                        if (ge.layer == j && ge.neuron == q) {
                            e = &ge;
                            break;
                        }
                    }
                    if (!e) throw ValidationError("gradient replay: missing alpha key");
                    e->per_row[row] += vbar[q] * st.v_pre[q];
                }
                vbar[q] = vbar[q] * st.slope[q] + bbar * st.intercept[q];
            }
            if (step_idx == 0) return;  // no relaxations further up, no more alphas
        }
    }
}

}  // namespace preimage
