#pragma once

// Per-region preimage under-approximation: lower-bound rows of the
// spec-appended network over a box form a polytope contained in the preimage,
// and the free relaxation slopes are optimized to grow its volume.

#include <cstdint>
#include <vector>

#include "preimage/geometry.hpp"
#include "preimage/linear_bounds.hpp"
#include "preimage/model.hpp"

namespace preimage {

struct LossConfig {
    std::size_t n_samples = 10000;
    double lr = 0.1;
    std::size_t steps = 20;
    double sigmoid_scale = 1.0;

    void validate() const;
};

struct ApproximatorConfig {
    LossConfig loss;
    AlphaPolicy alpha_policy;  // initial slopes and intermediate-bound slopes
    bool alpha_opt = true;
    // Extra input-space constraints conjoined into every polytope (used when
    // the input set is a general polytope rather than a box).
    std::vector<Halfspace> input_rows;
};

struct RegionApproximation {
    Hyperrectangle region;
    Polytope polytope;
    AlphaAssignment alpha;
    double est_polytope_frac = 0.0;  // sampled vol(polytope) / vol(region)
    double est_preimage_frac = 0.0;  // sampled vol(preimage & input rows) / vol(region)
    std::uint64_t sample_seed = 0;
};

// Assemble the region polytope from the K lower-bound rows plus any extra
// input rows. Rows with an (exactly) zero coefficient vector cannot go into
// a Polytope: a non-negative constant row is dropped as vacuous, a negative
// one turns the result into a canonical empty polytope.
Polytope build_polytope(const Network& spec_net, const Hyperrectangle& region,
                        const NeuronBounds& nb, const AlphaAssignment& alpha,
                        const std::vector<Halfspace>& input_rows);

// Differentiable volume surrogate: with g_k the lower-bound rows evaluated on
// the sample batch,
//   loss = -(1/N) sum_j sigmoid(scale * softmin_k g_k(x_j)),
// softmin via -logsumexp(-g). Returns the loss; when grad is non-null it is
// overwritten with d(loss)/d(alpha).
double surrogate_loss(const Network& spec_net, const NeuronBounds& nb,
                      const AlphaAssignment& alpha, const PointBatch& samples,
                      double sigmoid_scale, AlphaAssignment* grad);

// Projected gradient descent on the surrogate, `steps` updates with the best
// iterate (including the start) kept by measured polytope fraction on the
// fixed sample batch (drawn from `region`).
AlphaAssignment optimize_alpha(const Network& spec_net, const Hyperrectangle& region,
                               const NeuronBounds& nb, AlphaAssignment init,
                               const PointBatch& samples, const LossConfig& cfg,
                               const std::vector<Halfspace>& input_rows);

// Full per-region pipeline: intermediate bounds, initial alphas, optional
// optimization, polytope assembly, and the two sampled fractions. Split
// candidates skip the preimage fraction (with_preimage_frac = false leaves
// est_preimage_frac as NaN); it is filled in only for regions that are kept.
RegionApproximation approximate_region(const Network& net, const OutputSpec& spec,
                                       const Hyperrectangle& region,
                                       const ApproximatorConfig& cfg, std::uint64_t sample_seed,
                                       bool with_preimage_frac = true);

// Sampled fraction of the region inside the true preimage (network output
// satisfies the spec) and the extra input rows; regenerates the batch from
// the seed.
double estimate_preimage_fraction(const Network& net, const OutputSpec& spec,
                                  const Hyperrectangle& region,
                                  const std::vector<Halfspace>& input_rows,
                                  std::size_t n_samples, std::uint64_t sample_seed);

}  // namespace preimage
