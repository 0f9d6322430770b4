#include "preimage/oracle.hpp"

#include <cmath>
#include <string>

#include "preimage/errors.hpp"
#include "preimage/mat.hpp"
#include "preimage/parallel.hpp"

namespace preimage {

namespace {

// Affine view of one layer's pre-activations under a fixed activation
// pattern of everything below: h = A x + c.
struct AffineForm {
    Mat A;                  // width x input_dim
    std::vector<double> c;  // width
};

struct Enumerator {
    const Network& net;
    const OutputSpec& spec;
    const Hyperrectangle& region;
    std::vector<std::size_t> relu_layers;  // indices of relu layers
    DisjointPolytopeUnion out;

    // current DFS state
    std::vector<Halfspace> pattern_rows;
    std::vector<std::uint8_t> active;  // per neuron of the current layer

    Enumerator(const Network& n, const OutputSpec& s, const Hyperrectangle& r)
        : net(n), spec(s), region(r) {}

    bool feasible() const {
        Polytope p;
        p.box = region;
        p.halfspaces = pattern_rows;
        return !enumerate_vertices(p).empty();
    }

    // Sign constraint for pre-activation row (a, c): active means a.x+c >= 0.
    // Constant rows (a == 0) are decided immediately: nullopt result means
    // the branch is impossible, an empty halfspace means nothing to add.
    static bool row_is_zero(const double* a, std::size_t d) {
        for (std::size_t k = 0; k < d; ++k)
            if (a[k] != 0.0) return false;
        return true;
    }

    // Fix signs of layer `li`'s neurons starting at `q`, recursing into the
    // next layer when the pattern of this one is complete.
    void descend_neuron(std::size_t ri, const AffineForm& form, std::size_t q) {
        const std::size_t li = relu_layers[ri];
        const std::size_t width = net.layers[li].out_dim();
        if (q == width) {
            next_layer(ri, form);
            return;
        }
        const double* a = form.A.row(q);
        const double c = form.c[q];
        const std::size_t d = region.dim();

        for (int sign = 1; sign >= -1; sign -= 2) {
            if (row_is_zero(a, d)) {
                // constant pre-activation: exactly one sign survives (zero
                // counts as inactive so the cell is not visited twice), and
                // it adds no constraint
                if (sign > 0 ? c <= 0.0 : c > 0.0) continue;
                active[q] = sign > 0;
                descend_neuron(ri, form, q + 1);
                continue;
            }
            Halfspace h;
            h.a.assign(a, a + d);
            h.b = c;
            if (sign < 0) {
                for (double& v : h.a) v = -v;
                h.b = -h.b;
            }
            pattern_rows.push_back(std::move(h));
            if (feasible()) {
                active[q] = sign > 0;
                descend_neuron(ri, form, q + 1);
            }
            pattern_rows.pop_back();
        }
    }

    // Pattern of relu layer `ri` is fixed; build the next affine view and
    // recurse, or emit the cell polytope when all relu layers are done.
    void next_layer(std::size_t ri, const AffineForm& form) {
        const std::size_t d = region.dim();
        // activations of this layer: active ? (A x + c) : 0
        AffineForm act;
        act.A = form.A;
        act.c = form.c;
        for (std::size_t qq = 0; qq < act.A.rows; ++qq) {
            if (active[qq]) continue;
            for (std::size_t k = 0; k < d; ++k) act.A.at(qq, k) = 0.0;
            act.c[qq] = 0.0;
        }

        std::size_t next = relu_layers[ri] + 1;
        AffineForm cur = std::move(act);
        // compose the affine layers until the next relu layer (or the end)
        for (std::size_t li = next;; ++li) {
            if (li == net.layers.size()) {
                emit_cell(cur);
                return;
            }
            const Layer& L = net.layers[li];
            AffineForm composed;
            composed.A = Mat(L.out_dim(), d);
            composed.c.assign(L.out_dim(), 0.0);
            for (std::size_t r = 0; r < L.out_dim(); ++r) {
                double cc = L.bias[r];
                for (std::size_t q = 0; q < L.in_dim(); ++q) {
                    double w = L.W.at(r, q);
                    if (w == 0.0) continue;
                    cc += w * cur.c[q];
                    for (std::size_t k = 0; k < d; ++k)
                        composed.A.at(r, k) += w * cur.A.at(q, k);
                }
                composed.c[r] = cc;
            }
            cur = std::move(composed);
            if (L.relu) {
                std::vector<std::uint8_t> saved_active = active;
                active.assign(L.out_dim(), 0);
                descend_neuron(ri + 1, cur, 0);
                active = std::move(saved_active);
                return;
            }
        }
    }

    // cur is the affine output map of this cell; conjoin the spec rows.
    void emit_cell(const AffineForm& cur) {
        const std::size_t d = region.dim();
        Polytope cell;
        cell.box = region;
        cell.halfspaces = pattern_rows;
        for (const OutputSpecRow& row : spec.rows) {
            Halfspace h;
            h.a.assign(d, 0.0);
            h.b = row.d;
            for (std::size_t r = 0; r < cur.A.rows; ++r) {
                if (row.c[r] == 0.0) continue;
                h.b += row.c[r] * cur.c[r];
                for (std::size_t k = 0; k < d; ++k) h.a[k] += row.c[r] * cur.A.at(r, k);
            }
            if (row_is_zero(h.a.data(), d)) {
                if (h.b >= 0.0) continue;  // spec row vacuous in this cell
                return;                    // spec row impossible in this cell
            }
            cell.halfspaces.push_back(std::move(h));
        }
        if (!enumerate_vertices(cell).empty()) out.members.push_back(std::move(cell));
    }

    void run() {
        // identity affine view of the input feeding layer 0
        AffineForm id;
        id.A = Mat(net.input_dim(), net.input_dim());
        for (std::size_t k = 0; k < net.input_dim(); ++k) id.A.at(k, k) = 1.0;
        id.c.assign(net.input_dim(), 0.0);

        // compose through leading layers up to the first relu
        AffineForm cur = std::move(id);
        for (std::size_t li = 0;; ++li) {
            if (li == net.layers.size()) {
                emit_cell(cur);
                return;
            }
            const Layer& L = net.layers[li];
            AffineForm composed;
            composed.A = Mat(L.out_dim(), net.input_dim());
            composed.c.assign(L.out_dim(), 0.0);
            for (std::size_t r = 0; r < L.out_dim(); ++r) {
                double cc = L.bias[r];
                for (std::size_t q = 0; q < L.in_dim(); ++q) {
                    double w = L.W.at(r, q);
                    if (w == 0.0) continue;
                    cc += w * cur.c[q];
                    for (std::size_t k = 0; k < net.input_dim(); ++k)
                        composed.A.at(r, k) += w * cur.A.at(q, k);
                }
                composed.c[r] = cc;
            }
            cur = std::move(composed);
            if (L.relu) {
                active.assign(L.out_dim(), 0);
                descend_neuron(0, cur, 0);
                return;
            }
        }
    }
};

}  // namespace

DisjointPolytopeUnion exact_preimage(const Network& net, const OutputSpec& spec,
                                     const Hyperrectangle& region, const OracleConfig& cfg) {
    region.validate();
    net.validate();
    spec.validate(net.output_dim());
    if (region.dim() != net.input_dim())
        throw ValidationError("exact preimage: region/network dimension mismatch");
    if (net.relu_neuron_count() > cfg.max_hidden)
        throw CapabilityError("exact preimage limited to " + std::to_string(cfg.max_hidden) +
                              " relu neurons, network has " +
                              std::to_string(net.relu_neuron_count()));

    Enumerator en(net, spec, region);
    for (std::size_t li = 0; li < net.layers.size(); ++li)
        if (net.layers[li].relu) en.relu_layers.push_back(li);
    en.run();
    return std::move(en.out);
}

double exact_preimage_volume(const Network& net, const OutputSpec& spec,
                             const Hyperrectangle& region, const OracleConfig& cfg) {
    DisjointPolytopeUnion dup = exact_preimage(net, spec, region, cfg);
    std::vector<double> vols(dup.members.size(), 0.0);
    parallel_for(dup.members.size(), cfg.workers,
                 [&](std::size_t i) { vols[i] = exact_volume(dup.members[i], region.dim()); });
    double total = 0.0;
    for (double v : vols) total += v;
    return total;
}

}  // namespace preimage
