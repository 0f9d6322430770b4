#pragma once

// Quantitative property checking: does the preimage of O cover at least a
// fraction p of the input set I? Refinement runs over the bounding box of I
// with I's halfspaces conjoined into every polytope; once the Monte-Carlo
// estimate clears p * vol(I), the polytopes are measured exactly. Only a
// certified exact total can answer True; everything else stays Unknown.

#include <cstddef>

#include "preimage/geometry.hpp"
#include "preimage/model.hpp"
#include "preimage/refinement.hpp"

namespace preimage {

struct QuantitativeProperty {
    Polytope input_set;
    OutputSpec output_spec;
    double p = 0.9;

    void validate(std::size_t net_output_dim) const;
};

struct Verdict {
    bool certified = false;           // true answer "True", otherwise "Unknown"
    double certified_fraction = 0.0;  // exact vol(DUP) / vol(I), best measured
    std::size_t iterations = 0;
    std::size_t exact_volume_calls = 0;
};

// base_cfg provides tuning (samples, split, alpha, budget, seed); target and
// input rows are derived from the property.
Verdict verify(const Network& net, const QuantitativeProperty& prop,
               const RefinementConfig& base_cfg);

}  // namespace preimage
