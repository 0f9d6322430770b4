#include "preimage/approximator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "preimage/errors.hpp"
#include "preimage/kernels.hpp"

namespace preimage {

void LossConfig::validate() const {
    if (n_samples == 0) throw ValidationError("loss config: n_samples must be positive");
    if (!(lr > 0.0)) throw ValidationError("loss config: lr must be positive");
    if (!(sigmoid_scale > 0.0))
        throw ValidationError("loss config: sigmoid_scale must be positive");
}

namespace {

bool all_zero(const std::vector<double>& a) {
    for (double v : a)
        if (v != 0.0) return false;
    return true;
}

// A constraint no point of the box satisfies, so "empty" has a valid
// polytope representation (all-zero normals are rejected by validation).
Halfspace impossible_row(const Hyperrectangle& region) {
    Halfspace h;
    h.a.assign(region.dim(), 0.0);
    h.a[0] = 1.0;
    h.b = -(region.upper[0] + 1.0);
    return h;
}

}  // namespace

Polytope build_polytope(const Network& spec_net, const Hyperrectangle& region,
                        const NeuronBounds& nb, const AlphaAssignment& alpha,
                        const std::vector<Halfspace>& input_rows) {
    AffineBound low = backward_lower_bounds(spec_net, nb, alpha);
    Polytope poly;
    poly.box = region;
    poly.halfspaces = input_rows;
    for (std::size_t k = 0; k < low.A.rows; ++k) {
        Halfspace h;
        h.a.assign(low.A.row(k), low.A.row(k) + low.A.cols);
        h.b = low.b[k];
        if (all_zero(h.a)) {
            if (h.b >= 0.0) continue;  // row holds everywhere in the box
            poly.halfspaces.assign(1, impossible_row(region));
            break;
        }
        poly.halfspaces.push_back(std::move(h));
    }
    poly.validate();
    return poly;
}

double surrogate_loss(const Network& spec_net, const NeuronBounds& nb,
                      const AlphaAssignment& alpha, const PointBatch& samples,
                      double sigmoid_scale, AlphaAssignment* grad) {
    const std::size_t K = spec_net.output_dim();
    const std::size_t N = samples.n;
    if (N == 0) throw ValidationError("surrogate loss: empty sample batch");
    if (alpha.rows != K) throw ValidationError("surrogate loss: alpha rows != spec rows");

    // Lower-bound rows, with tapes when gradients are requested.
    std::vector<std::vector<double>> A(K);
    std::vector<double> b(K);
    std::vector<BackwardTape> tapes(K);
    for (std::size_t k = 0; k < K; ++k)
        backward_lower_row(spec_net, k, nb, alpha, A[k], b[k], grad ? &tapes[k] : nullptr);

    // g[k*N + j] = A[k] . x_j + b[k]
    std::vector<double> g(K * N);
    for (std::size_t k = 0; k < K; ++k) {
        double* gk = g.data() + k * N;
        std::fill(gk, gk + N, b[k]);
        for (std::size_t d = 0; d < samples.d; ++d)
            kern::axpy(A[k][d], samples.dim_ptr(d), gk, N);
    }

    // loss and per-sample softmin weights
    double loss = 0.0;
    std::vector<double> w;  // dL/dg, K x N, only when grad requested
    if (grad) w.assign(K * N, 0.0);
    std::vector<double> neg(K);
    for (std::size_t j = 0; j < N; ++j) {
        double m = -g[j];  // max of -g over rows
        for (std::size_t k = 1; k < K; ++k) m = std::max(m, -g[k * N + j]);
        double z = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            neg[k] = std::exp(-g[k * N + j] - m);
            z += neg[k];
        }
        double softmin = -(m + std::log(z));
        double s = 1.0 / (1.0 + std::exp(-sigmoid_scale * softmin));
        loss -= s;
        if (grad) {
            double ds = sigmoid_scale * s * (1.0 - s) / static_cast<double>(N);
            for (std::size_t k = 0; k < K; ++k) w[k * N + j] = -ds * (neg[k] / z);
        }
    }
    loss /= static_cast<double>(N);

    if (grad) {
        *grad = AlphaAssignment::zeros_like(alpha);
        std::vector<double> abar(samples.d);
        for (std::size_t k = 0; k < K; ++k) {
            const double* wk = w.data() + k * N;
            for (std::size_t d = 0; d < samples.d; ++d)
                abar[d] = kern::dot(wk, samples.dim_ptr(d), N);
            double bbar = kern::sum(wk, N);
            backward_lower_grad(spec_net, k, tapes[k], abar, bbar, *grad);
        }
    }
    return loss;
}

namespace {

// Fraction of the batch satisfying the bound rows plus the input rows
// (samples come from the region box, so no box test).
double polytope_fraction(const Network& spec_net, const NeuronBounds& nb,
                         const AlphaAssignment& alpha, const PointBatch& samples,
                         const Hyperrectangle& region,
                         const std::vector<Halfspace>& input_rows) {
    Polytope poly = build_polytope(spec_net, region, nb, alpha, input_rows);
    std::vector<std::uint8_t> mask(samples.n, 1);
    apply_halfspace_mask(poly.halfspaces, samples, mask);
    return static_cast<double>(kern::count_nonzero(mask.data(), samples.n)) /
           static_cast<double>(samples.n);
}

}  // namespace

AlphaAssignment optimize_alpha(const Network& spec_net, const Hyperrectangle& region,
                               const NeuronBounds& nb, AlphaAssignment init,
                               const PointBatch& samples, const LossConfig& cfg,
                               const std::vector<Halfspace>& input_rows) {
    cfg.validate();
    init.clamp01();
    if (init.entries.empty()) return init;  // nothing to optimize

    AlphaAssignment best = init;
    double best_frac =
        polytope_fraction(spec_net, nb, init, samples, region, input_rows);
    AlphaAssignment cur = std::move(init);
    AlphaAssignment grad;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        surrogate_loss(spec_net, nb, cur, samples, cfg.sigmoid_scale, &grad);
        cur.add_scaled(grad, -cfg.lr);
        cur.clamp01();
        double frac = polytope_fraction(spec_net, nb, cur, samples, region, input_rows);
        if (frac > best_frac) {
            best_frac = frac;
            best = cur;
        }
    }
    return best;
}

double estimate_preimage_fraction(const Network& net, const OutputSpec& spec,
                                  const Hyperrectangle& region,
                                  const std::vector<Halfspace>& input_rows,
                                  std::size_t n_samples, std::uint64_t sample_seed) {
    SeededSampler rng(sample_seed);
    PointBatch pts = sample_uniform(region, n_samples, rng);
    std::vector<std::uint8_t> mask(pts.n, 1);
    apply_halfspace_mask(input_rows, pts, mask);

    PointBatch out = net.forward_batch(pts);
    std::vector<double> acc(pts.n);
    for (const OutputSpecRow& r : spec.rows) {
        std::fill(acc.begin(), acc.end(), r.d);
        for (std::size_t k = 0; k < out.d; ++k)
            kern::axpy(r.c[k], out.dim_ptr(k), acc.data(), pts.n);
        kern::mask_ge(acc.data(), 0.0, mask.data(), pts.n);
    }
    return static_cast<double>(kern::count_nonzero(mask.data(), pts.n)) /
           static_cast<double>(pts.n);
}

RegionApproximation approximate_region(const Network& net, const OutputSpec& spec,
                                       const Hyperrectangle& region,
                                       const ApproximatorConfig& cfg, std::uint64_t sample_seed,
                                       bool with_preimage_frac) {
    region.validate();
    cfg.loss.validate();
    spec.validate(net.output_dim());
    Network spec_net = append_spec_rows(net, spec);

    NeuronBounds nb = intermediate_bounds(spec_net, region, cfg.alpha_policy);
    AlphaAssignment alpha =
        AlphaAssignment::make_default(spec_net, nb, spec.size(), cfg.alpha_policy);

    SeededSampler rng(sample_seed);
    PointBatch samples = sample_uniform(region, cfg.loss.n_samples, rng);

    if (cfg.alpha_opt)
        alpha = optimize_alpha(spec_net, region, nb, std::move(alpha), samples, cfg.loss,
                               cfg.input_rows);

    RegionApproximation out;
    out.region = region;
    out.polytope = build_polytope(spec_net, region, nb, alpha, cfg.input_rows);
    out.alpha = std::move(alpha);
    out.sample_seed = sample_seed;

    std::vector<std::uint8_t> mask(samples.n, 1);
    apply_halfspace_mask(out.polytope.halfspaces, samples, mask);
    out.est_polytope_frac = static_cast<double>(kern::count_nonzero(mask.data(), samples.n)) /
                            static_cast<double>(samples.n);
    out.est_preimage_frac = with_preimage_frac
                                ? estimate_preimage_fraction(net, spec, region, cfg.input_rows,
                                                             cfg.loss.n_samples, sample_seed)
                                : std::numeric_limits<double>::quiet_NaN();
    return out;
}

}  // namespace preimage
