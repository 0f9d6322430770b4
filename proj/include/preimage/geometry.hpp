#pragma once

// Polyhedral primitives: axis-aligned boxes, halfspace-constrained polytopes,
// disjoint unions, uniform sampling, vertex enumeration and exact volume.
//
// Conventions:
//   * a halfspace is the closed set { x : a.x + b >= 0 }
//   * a Polytope is its bounding box intersected with a halfspace list
//   * membership is closed everywhere

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace preimage {

struct Hyperrectangle {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const { return lower.size(); }
    double volume() const;
    double width(std::size_t k) const { return upper[k] - lower[k]; }
    bool contains(const std::vector<double>& x) const;
    // Throws ValidationError unless lower/upper match and lower[k] <= upper[k].
    void validate() const;
};

struct Halfspace {
    std::vector<double> a;
    double b = 0.0;

    double eval(const std::vector<double>& x) const;
};

struct Polytope {
    Hyperrectangle box;
    std::vector<Halfspace> halfspaces;

    std::size_t dim() const { return box.dim(); }
    bool contains(const std::vector<double>& x) const;
    void validate() const;
};

struct DisjointPolytopeUnion {
    std::vector<Polytope> members;

    bool contains(const std::vector<double>& x) const;
};

// True when no two member boxes share interior volume. Holds for unions
// produced by box refinement; unions that are disjoint through halfspaces
// alone (shared box) legitimately fail this predicate.
bool boxes_interior_disjoint(const DisjointPolytopeUnion& dup);

// --------------------------------------------------------------- sampling ---

// Counter-free splitmix64 stream. Deterministic across platforms; the whole
// artifact's reproducibility contract rests on this generator, so it is
// deliberately not std::mt19937 / std::uniform_real_distribution.
class SeededSampler {
   public:
    explicit SeededSampler(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    // uniform in [0, 1), 53-bit mantissa
    double next_unit();

   private:
    std::uint64_t state_;
};

// Derive an independent stream seed from a parent seed and a branch label.
std::uint64_t mix_seed(std::uint64_t parent, std::uint64_t branch);

// Structure-of-arrays sample batch: coordinate k of all points is contiguous,
// so per-halfspace evaluation is one axpy per dimension.
struct PointBatch {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> coords;  // [k * n + i] = point i, coordinate k

    void resize(std::size_t n_, std::size_t d_);
    const double* dim_ptr(std::size_t k) const { return coords.data() + k * n; }
    double* dim_ptr(std::size_t k) { return coords.data() + k * n; }
    std::vector<double> point(std::size_t i) const;
};

// n uniform points in the box; consumes n*d draws in point-major order.
PointBatch sample_uniform(const Hyperrectangle& box, std::size_t n, SeededSampler& rng);

// Byte mask (1 = inside) of the batch against box + halfspaces.
std::vector<std::uint8_t> membership_mask(const Polytope& p, const PointBatch& pts);
// As above but only the halfspace rows, skipping the box test (for batches
// already drawn from p.box).
void apply_halfspace_mask(const std::vector<Halfspace>& rows, const PointBatch& pts,
                          std::vector<std::uint8_t>& mask);

// Fraction of `pts` inside p (box + halfspaces). For pts uniform over p.box
// this estimates vol(p) / vol(p.box).
double estimate_volume_fraction(const Polytope& p, const PointBatch& pts);
// Convenience: draw n points from p.box with rng, then estimate.
double estimate_volume_fraction(const Polytope& p, std::size_t n, SeededSampler& rng);

// --------------------------------------------------------- exact geometry ---

// All vertices of the polytope (box facets count as constraints), deduplicated
// at L-inf tolerance 1e-9; candidate points must satisfy every constraint to
// slack 1e-8. Cost is combinatorial in the constraint count (d-subsets).
std::vector<std::vector<double>> enumerate_vertices(const Polytope& p);

// Exact volume by recursive facet-pyramid decomposition over the enumerated
// vertices. Boxes without halfspaces short-cut to the edge product. Throws
// CapabilityError above max_dim. Lower-dimensional (degenerate) sets give 0.
double exact_volume(const Polytope& p, std::size_t max_dim = 10);
double exact_volume(const DisjointPolytopeUnion& dup, std::size_t max_dim = 10);

// Tightest axis-aligned box around the polytope (via its vertices).
// Throws ValidationError if the polytope is empty.
Hyperrectangle outer_box(const Polytope& p);

// Split the box at the midpoint of dimension k.
std::pair<Hyperrectangle, Hyperrectangle> bisect(const Hyperrectangle& box, std::size_t k);

// Intersection with the box part resolved; nullopt when the boxes miss.
std::optional<Polytope> intersect(const Polytope& p, const Polytope& q);

}  // namespace preimage
