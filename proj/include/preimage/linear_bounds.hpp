#pragma once

// Backward linear bound propagation for ReLU networks over a box domain.
//
// For a network g over box B this produces affine rows L, l and U, u with
//   L x + l  <=  g(x)  <=  U x + u   for all x in B,
// by propagating coefficient rows backward through the layers and replacing
// each ReLU with sound linear envelopes chosen by the sign of the incoming
// coefficient. The free parameter is the lower-envelope slope (alpha) of each
// unstable neuron; the preimage construction optimizes one alpha per unstable
// neuron per output row.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "preimage/geometry.hpp"
#include "preimage/mat.hpp"
#include "preimage/model.hpp"

namespace preimage {

// Sound linear envelope of relu(z) for pre-activation range [l, u]:
//   lower_slope*z + lower_intercept <= relu(z) <= upper_slope*z + upper_intercept.
// alpha in [0,1] is the lower slope used only when l < 0 < u.
struct ReluRelaxation {
    double lower_slope = 0.0;
    double lower_intercept = 0.0;
    double upper_slope = 0.0;
    double upper_intercept = 0.0;
};

ReluRelaxation relax_relu(double l, double u, double alpha);

// Affine bound rows over the input: row k is A[k,:] x + b[k].
struct AffineBound {
    Mat A;
    std::vector<double> b;
};

// Interval of a.x + b over the box (coefficient sign splitting).
std::pair<double, double> concretize(const std::vector<double>& a, double b,
                                     const Hyperrectangle& box);

// Pre-activation intervals of every ReLU layer, indexed by layer position.
// Non-ReLU layers keep empty vectors.
struct NeuronBounds {
    std::vector<std::vector<double>> lower;
    std::vector<std::vector<double>> upper;

    bool unstable(std::size_t layer, std::size_t j) const {
        return lower[layer][j] < 0.0 && upper[layer][j] > 0.0;
    }
    std::size_t count_unstable() const;
    void validate() const;
};

// How to pick lower slopes when no optimized assignment exists yet:
// adaptive picks 1 when u >= |l| (hug the steeper side), else 0;
// fixed uses one constant slope everywhere.
struct AlphaPolicy {
    bool adaptive = true;
    double fixed_value = 0.5;

    static AlphaPolicy make_adaptive() { return {true, 0.5}; }
    static AlphaPolicy make_fixed(double v) { return {false, v}; }
    double pick(double l, double u) const;
};

// One lower slope per (unstable neuron, output row), keyed exactly by the
// unstable set. Entries stay sorted by (layer, neuron).
struct AlphaAssignment {
    struct Entry {
        std::size_t layer = 0;
        std::size_t neuron = 0;
        std::vector<double> per_row;
    };
    std::vector<Entry> entries;
    std::size_t rows = 0;

    static AlphaAssignment make_default(const Network& net, const NeuronBounds& nb,
                                        std::size_t rows, const AlphaPolicy& policy);
    static AlphaAssignment zeros_like(const AlphaAssignment& shape);

    const Entry* find(std::size_t layer, std::size_t neuron) const;
    // Throws ValidationError unless keys match the unstable set of nb exactly
    // and every entry carries `rows` values in [0,1].
    void validate_against(const Network& net, const NeuronBounds& nb) const;
    void clamp01();
    // this += scale * g (same key structure required)
    void add_scaled(const AlphaAssignment& g, double scale);
};

// Pre-activation bounds for every ReLU layer of `net` over `box`, computed
// layer by layer with backward propagation through the already-bounded
// prefix. `policy` supplies the lower slopes.
NeuronBounds intermediate_bounds(const Network& net, const Hyperrectangle& box,
                                 const AlphaPolicy& policy);

// Record of the relaxation steps taken while propagating one row, enough to
// replay the pass in reverse for gradients.
struct BackwardTape {
    struct RelaxStep {
        std::size_t layer;
        std::vector<double> v_pre;       // coefficients on the relu outputs
        std::vector<double> slope;       // chosen per-neuron slope
        std::vector<double> intercept;   // chosen per-neuron intercept
        std::vector<std::uint8_t> alpha_used;  // slope was this row's free alpha
    };
    std::vector<RelaxStep> steps;  // in backward (output-to-input) order
};

// Lower bound row for output `row` of `net` (typically a spec-appended
// network): returns a, b with a.x + b <= g_row(x) on the box that produced
// nb. Optionally records the tape for gradient replay.
void backward_lower_row(const Network& net, std::size_t row, const NeuronBounds& nb,
                        const AlphaAssignment& alpha, std::vector<double>& a_out, double& b_out,
                        BackwardTape* tape = nullptr);

// All K lower rows.
AffineBound backward_lower_bounds(const Network& net, const NeuronBounds& nb,
                                  const AlphaAssignment& alpha);
// Upper counterpart (same relaxations, envelope choice mirrored).
AffineBound backward_upper_bounds(const Network& net, const NeuronBounds& nb,
                                  const AlphaAssignment& alpha);

// Accumulate d(loss)/d(alpha) into `grad` given the adjoint (abar, bbar) of
// row `row`'s lower bound coefficients, replaying `tape` in reverse.
void backward_lower_grad(const Network& net, std::size_t row, const BackwardTape& tape,
                         const std::vector<double>& abar, double bbar, AlphaAssignment& grad);

}  // namespace preimage
