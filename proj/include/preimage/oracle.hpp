#pragma once

// Exact preimage for small ReLU networks by activation-pattern enumeration.
// Within one pattern the network is affine, so each feasible pattern yields
// one polytope: the pattern's sign constraints plus the spec rows composed
// with the pattern's affine map. Patterns are grown neuron by neuron with a
// feasibility check per step, which prunes whole subtrees and keeps the
// enumeration near the (much smaller) count of linear regions that actually
// intersect the box.

#include <cstddef>

#include "preimage/geometry.hpp"
#include "preimage/model.hpp"

namespace preimage {

struct OracleConfig {
    // Hard cap on total ReLU neurons; beyond this the enumeration is refused.
    std::size_t max_hidden = 24;
    std::size_t workers = 0;
};

// Disjoint polytopes whose union is exactly the preimage of the spec within
// `region` (up to shared measure-zero faces). Members arrive in pattern
// order, so output is deterministic.
DisjointPolytopeUnion exact_preimage(const Network& net, const OutputSpec& spec,
                                     const Hyperrectangle& region,
                                     const OracleConfig& cfg = {});

double exact_preimage_volume(const Network& net, const OutputSpec& spec,
                             const Hyperrectangle& region, const OracleConfig& cfg = {});

}  // namespace preimage
