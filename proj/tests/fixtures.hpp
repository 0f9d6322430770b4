#pragma once

// Shared test networks and helpers.
//
// tiny_2_2_1: hand-built 2-2-1 net
//   f(x) = relu(x1 + x2 - 0.5) - relu(x1 - x2) - 0.1
// over [0,1]^2 both hidden neurons straddle zero, and the preimage of
// f(x) >= 0 is the union of two polygons with exact area 0.655:
//   {x1 >= x2, x2 >= 0.3} and {x2 >= x1, x1 + x2 >= 0.6}.
//
// seeded_2_10_10_4: 2-10-10-4 classifier with fixed pseudo-random weights
// over [0,2]^2; all four argmax class regions carry non-trivial volume.

#include <cstdint>
#include <string>

#include "preimage/geometry.hpp"
#include "preimage/model.hpp"

namespace fixtures {

preimage::Network tiny_2_2_1();
preimage::Hyperrectangle unit_box2();
// exact area of { f >= 0 } for tiny_2_2_1 over unit_box2
inline constexpr double kTinyPreimageArea = 0.655;

inline constexpr std::uint64_t kF2Seed = 35;
preimage::Network seeded_2_10_10_4(std::uint64_t seed = kF2Seed);
preimage::Hyperrectangle f2_box();  // [0,2]^2

// single affine layer y = x (no relu)
preimage::Network linear_identity(std::size_t d);

// one-row spec: y[idx] >= thresh
preimage::OutputSpec spec_output_ge(std::size_t out_dim, std::size_t idx, double thresh);
// class k beats every other class: rows (e_k - e_j) . y >= 0
preimage::OutputSpec spec_one_vs_rest(std::size_t classes, std::size_t k);

// fresh scratch directory under the build tree
std::string fresh_tmp_dir(const std::string& tag);

}  // namespace fixtures
