#include "preimage/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "preimage/errors.hpp"
#include "preimage/kernels.hpp"

namespace preimage {

namespace {

// Tolerances, frozen project-wide:
//   feasibility slack for vertex candidates
constexpr double kFeasTol = 1e-8;
//   vertex deduplication (L-inf)
constexpr double kDedupTol = 1e-9;
//   vertex-on-facet test for unit-normal constraints
constexpr double kFaceTol = 1e-7;
//   Gaussian elimination pivot threshold
constexpr double kPivotTol = 1e-12;

}  // namespace

// ----------------------------------------------------------- basic shapes ---

double Hyperrectangle::volume() const {
    double v = 1.0;
    for (std::size_t k = 0; k < dim(); ++k) v *= width(k);
    return v;
}

bool Hyperrectangle::contains(const std::vector<double>& x) const {
    if (x.size() != dim()) return false;
    for (std::size_t k = 0; k < dim(); ++k)
        if (x[k] < lower[k] || x[k] > upper[k]) return false;
    return true;
}

void Hyperrectangle::validate() const {
    if (lower.size() != upper.size())
        throw ValidationError("hyperrectangle: lower/upper dimension mismatch");
    if (lower.empty()) throw ValidationError("hyperrectangle: zero-dimensional");
    for (std::size_t k = 0; k < dim(); ++k) {
        if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]))
            throw ValidationError("hyperrectangle: non-finite bound");
        if (lower[k] > upper[k])
            throw ValidationError("hyperrectangle: lower > upper in dimension " +
                                  std::to_string(k));
    }
}

double Halfspace::eval(const std::vector<double>& x) const {
    return kern::dot(a.data(), x.data(), a.size()) + b;
}

bool Polytope::contains(const std::vector<double>& x) const {
    if (!box.contains(x)) return false;
    for (const Halfspace& h : halfspaces)
        if (h.eval(x) < 0.0) return false;
    return true;
}

void Polytope::validate() const {
    box.validate();
    for (const Halfspace& h : halfspaces) {
        if (h.a.size() != dim())
            throw ValidationError("polytope: halfspace dimension mismatch");
        double amax = 0.0;
        for (double c : h.a) {
            if (!std::isfinite(c) || !std::isfinite(h.b))
                throw ValidationError("polytope: non-finite halfspace coefficient");
            amax = std::max(amax, std::fabs(c));
        }
        if (amax == 0.0) throw ValidationError("polytope: halfspace with all-zero normal");
    }
}

bool DisjointPolytopeUnion::contains(const std::vector<double>& x) const {
    for (const Polytope& p : members)
        if (p.contains(x)) return true;
    return false;
}

bool boxes_interior_disjoint(const DisjointPolytopeUnion& dup) {
    for (std::size_t i = 0; i < dup.members.size(); ++i) {
        for (std::size_t j = i + 1; j < dup.members.size(); ++j) {
            const Hyperrectangle& a = dup.members[i].box;
            const Hyperrectangle& b = dup.members[j].box;
            if (a.dim() != b.dim()) return false;
            bool overlap = true;
            for (std::size_t k = 0; k < a.dim() && overlap; ++k)
                overlap = std::min(a.upper[k], b.upper[k]) > std::max(a.lower[k], b.lower[k]);
            if (overlap) return false;
        }
    }
    return true;
}

// --------------------------------------------------------------- sampling ---

namespace {
inline std::uint64_t splitmix_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace

std::uint64_t SeededSampler::next_u64() { return splitmix_next(state_); }

double SeededSampler::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t mix_seed(std::uint64_t parent, std::uint64_t branch) {
    std::uint64_t s = parent ^ (0x9E3779B97F4A7C15ULL * (branch + 0x632BE59BD9B4E019ULL));
    return splitmix_next(s);
}

void PointBatch::resize(std::size_t n_, std::size_t d_) {
    n = n_;
    d = d_;
    coords.assign(n * d, 0.0);
}

std::vector<double> PointBatch::point(std::size_t i) const {
    std::vector<double> x(d);
    for (std::size_t k = 0; k < d; ++k) x[k] = coords[k * n + i];
    return x;
}

PointBatch sample_uniform(const Hyperrectangle& box, std::size_t n, SeededSampler& rng) {
    box.validate();
    PointBatch pb;
    pb.resize(n, box.dim());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < pb.d; ++k) {
            double u = rng.next_unit();
            pb.coords[k * n + i] = box.lower[k] + u * box.width(k);
        }
    }
    return pb;
}

void apply_halfspace_mask(const std::vector<Halfspace>& rows, const PointBatch& pts,
                          std::vector<std::uint8_t>& mask) {
    std::vector<double> acc(pts.n);
    for (const Halfspace& h : rows) {
        if (h.a.size() != pts.d) throw ValidationError("halfspace/batch dimension mismatch");
        std::fill(acc.begin(), acc.end(), h.b);
        for (std::size_t k = 0; k < pts.d; ++k)
            kern::axpy(h.a[k], pts.dim_ptr(k), acc.data(), pts.n);
        kern::mask_ge(acc.data(), 0.0, mask.data(), pts.n);
    }
}

std::vector<std::uint8_t> membership_mask(const Polytope& p, const PointBatch& pts) {
    if (p.dim() != pts.d) throw ValidationError("polytope/batch dimension mismatch");
    std::vector<std::uint8_t> mask(pts.n, 1);
    for (std::size_t k = 0; k < pts.d; ++k)
        kern::mask_range(pts.dim_ptr(k), p.box.lower[k], p.box.upper[k], mask.data(), pts.n);
    apply_halfspace_mask(p.halfspaces, pts, mask);
    return mask;
}

double estimate_volume_fraction(const Polytope& p, const PointBatch& pts) {
    if (pts.n == 0) throw ValidationError("volume estimate over zero samples");
    std::vector<std::uint8_t> mask = membership_mask(p, pts);
    return static_cast<double>(kern::count_nonzero(mask.data(), pts.n)) /
           static_cast<double>(pts.n);
}

double estimate_volume_fraction(const Polytope& p, std::size_t n, SeededSampler& rng) {
    PointBatch pts = sample_uniform(p.box, n, rng);
    return estimate_volume_fraction(p, pts);
}

// --------------------------------------------------------- exact geometry ---

namespace {

// Solve M x = rhs in place (row-major, d x d) by partial-pivot elimination.
bool solve_linear(std::vector<double>& M, std::vector<double>& rhs, std::size_t d) {
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t piv = col;
        double best = std::fabs(M[col * d + col]);
        for (std::size_t r = col + 1; r < d; ++r) {
            double v = std::fabs(M[r * d + col]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best < kPivotTol) return false;
        if (piv != col) {
            for (std::size_t c = 0; c < d; ++c) std::swap(M[piv * d + c], M[col * d + c]);
            std::swap(rhs[piv], rhs[col]);
        }
        double inv = 1.0 / M[col * d + col];
        for (std::size_t r = col + 1; r < d; ++r) {
            double f = M[r * d + col] * inv;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < d; ++c) M[r * d + c] -= f * M[col * d + c];
            rhs[r] -= f * rhs[col];
        }
    }
    for (std::size_t r = d; r-- > 0;) {
        double v = rhs[r];
        for (std::size_t c = r + 1; c < d; ++c) v -= M[r * d + c] * rhs[c];
        rhs[r] = v / M[r * d + r];
    }
    return true;
}

// Box facets plus explicit halfspaces as one constraint list.
std::vector<Halfspace> constraint_rows(const Polytope& p) {
    const std::size_t d = p.dim();
    std::vector<Halfspace> rows = p.halfspaces;
    rows.reserve(rows.size() + 2 * d);
    for (std::size_t k = 0; k < d; ++k) {
        Halfspace lo, hi;
        lo.a.assign(d, 0.0);
        lo.a[k] = 1.0;
        lo.b = -p.box.lower[k];
        hi.a.assign(d, 0.0);
        hi.a[k] = -1.0;
        hi.b = p.box.upper[k];
        rows.push_back(std::move(lo));
        rows.push_back(std::move(hi));
    }
    return rows;
}

double row_eval(const Halfspace& h, const std::vector<double>& x) {
    double v = h.b;
    for (std::size_t k = 0; k < x.size(); ++k) v += h.a[k] * x[k];
    return v;
}

// Normalize every row to a unit normal and drop near-duplicates.
std::vector<Halfspace> normalized_unique_rows(std::vector<Halfspace> rows) {
    std::vector<Halfspace> out;
    for (Halfspace& h : rows) {
        double norm = 0.0;
        for (double c : h.a) norm += c * c;
        norm = std::sqrt(norm);
        if (norm < kPivotTol) continue;
        for (double& c : h.a) c /= norm;
        h.b /= norm;
        bool dup = false;
        for (const Halfspace& g : out) {
            if (std::fabs(g.b - h.b) > kDedupTol) continue;
            double diff = 0.0;
            for (std::size_t k = 0; k < h.a.size(); ++k)
                diff = std::max(diff, std::fabs(g.a[k] - h.a[k]));
            if (diff <= kDedupTol) {
                dup = true;
                break;
            }
        }
        if (!dup) out.push_back(std::move(h));
    }
    return out;
}

// Recursive pyramid decomposition: vol = sum over facets of
// dist(centroid, facet) * vol_{d-1}(facet) / d.
double volume_recursive(const std::vector<std::vector<double>>& verts,
                        const std::vector<Halfspace>& rows, std::size_t d) {
    if (verts.size() < d + 1) return 0.0;
    if (d == 1) {
        double lo = verts[0][0], hi = verts[0][0];
        for (const auto& v : verts) {
            lo = std::min(lo, v[0]);
            hi = std::max(hi, v[0]);
        }
        return hi - lo;
    }

    std::vector<double> centroid(d, 0.0);
    for (const auto& v : verts)
        for (std::size_t k = 0; k < d; ++k) centroid[k] += v[k];
    for (double& c : centroid) c /= static_cast<double>(verts.size());

    double total = 0.0;
    for (std::size_t fi = 0; fi < rows.size(); ++fi) {
        const Halfspace& face = rows[fi];
        std::vector<std::size_t> on_face;
        for (std::size_t vi = 0; vi < verts.size(); ++vi)
            if (std::fabs(row_eval(face, verts[vi])) <= kFaceTol) on_face.push_back(vi);
        if (on_face.size() < d) continue;

        double dist = row_eval(face, centroid);
        if (dist <= kPivotTol) continue;

        // Orthonormal basis of the facet hyperplane.
        std::vector<std::vector<double>> basis;
        for (std::size_t j = 0; j < d && basis.size() < d - 1; ++j) {
            std::vector<double> e(d, 0.0);
            e[j] = 1.0;
            double pa = 0.0;
            for (std::size_t k = 0; k < d; ++k) pa += e[k] * face.a[k];
            for (std::size_t k = 0; k < d; ++k) e[k] -= pa * face.a[k];
            for (const auto& bvec : basis) {
                double pb = 0.0;
                for (std::size_t k = 0; k < d; ++k) pb += e[k] * bvec[k];
                for (std::size_t k = 0; k < d; ++k) e[k] -= pb * bvec[k];
            }
            double norm = 0.0;
            for (double c : e) norm += c * c;
            norm = std::sqrt(norm);
            if (norm < 1e-9) continue;
            for (double& c : e) c /= norm;
            basis.push_back(std::move(e));
        }
        if (basis.size() != d - 1) continue;

        const std::vector<double>& origin = verts[on_face[0]];
        std::vector<std::vector<double>> sub_verts;
        sub_verts.reserve(on_face.size());
        for (std::size_t vi : on_face) {
            std::vector<double> c(d - 1);
            for (std::size_t j = 0; j < d - 1; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < d; ++k)
                    s += basis[j][k] * (verts[vi][k] - origin[k]);
                c[j] = s;
            }
            sub_verts.push_back(std::move(c));
        }

        std::vector<Halfspace> sub_rows;
        for (std::size_t ri = 0; ri < rows.size(); ++ri) {
            if (ri == fi) continue;
            Halfspace h;
            h.a.resize(d - 1);
            for (std::size_t j = 0; j < d - 1; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < d; ++k) s += basis[j][k] * rows[ri].a[k];
                h.a[j] = s;
            }
            h.b = row_eval(rows[ri], origin);
            sub_rows.push_back(std::move(h));
        }
        sub_rows = normalized_unique_rows(std::move(sub_rows));

        total += dist * volume_recursive(sub_verts, sub_rows, d - 1) / static_cast<double>(d);
    }
    return total;
}

}  // namespace

std::vector<std::vector<double>> enumerate_vertices(const Polytope& p) {
    p.validate();
    const std::size_t d = p.dim();
    std::vector<Halfspace> rows = constraint_rows(p);
    const std::size_t n = rows.size();
    std::vector<std::vector<double>> verts;
    if (n < d) return verts;

    std::vector<std::size_t> idx(d);
    for (std::size_t k = 0; k < d; ++k) idx[k] = k;

    std::vector<double> M(d * d), rhs(d), x;
    while (true) {
        for (std::size_t r = 0; r < d; ++r) {
            const Halfspace& h = rows[idx[r]];
            for (std::size_t c = 0; c < d; ++c) M[r * d + c] = h.a[c];
            rhs[r] = -h.b;
        }
        std::vector<double> Mw = M, bw = rhs;
        if (solve_linear(Mw, bw, d)) {
            x = bw;
            bool feasible = true;
            for (std::size_t r = 0; r < n && feasible; ++r)
                feasible = row_eval(rows[r], x) >= -kFeasTol;
            if (feasible) {
                bool dup = false;
                for (const auto& v : verts) {
                    double diff = 0.0;
                    for (std::size_t k = 0; k < d; ++k)
                        diff = std::max(diff, std::fabs(v[k] - x[k]));
                    if (diff <= kDedupTol) {
                        dup = true;
                        break;
                    }
                }
                if (!dup) verts.push_back(x);
            }
        }
        // next d-combination of {0..n-1}
        std::size_t j = d;
        while (j-- > 0) {
            if (idx[j] + (d - j) < n) {
                ++idx[j];
                for (std::size_t t = j + 1; t < d; ++t) idx[t] = idx[t - 1] + 1;
                break;
            }
            if (j == 0) return verts;
        }
    }
}

double exact_volume(const Polytope& p, std::size_t max_dim) {
    p.validate();
    if (p.dim() > max_dim)
        throw CapabilityError("exact volume limited to dimension " + std::to_string(max_dim) +
                              ", polytope has " + std::to_string(p.dim()));
    if (p.halfspaces.empty()) return p.box.volume();
    std::vector<std::vector<double>> verts = enumerate_vertices(p);
    if (verts.size() < p.dim() + 1) return 0.0;
    std::vector<Halfspace> rows = normalized_unique_rows(constraint_rows(p));
    return volume_recursive(verts, rows, p.dim());
}

double exact_volume(const DisjointPolytopeUnion& dup, std::size_t max_dim) {
    double total = 0.0;
    for (const Polytope& p : dup.members) total += exact_volume(p, max_dim);
    return total;
}

Hyperrectangle outer_box(const Polytope& p) {
    std::vector<std::vector<double>> verts = enumerate_vertices(p);
    if (verts.empty()) throw ValidationError("outer box of an empty polytope");
    Hyperrectangle out;
    out.lower = verts[0];
    out.upper = verts[0];
    for (const auto& v : verts) {
        for (std::size_t k = 0; k < v.size(); ++k) {
            out.lower[k] = std::min(out.lower[k], v[k]);
            out.upper[k] = std::max(out.upper[k], v[k]);
        }
    }
    return out;
}

std::pair<Hyperrectangle, Hyperrectangle> bisect(const Hyperrectangle& box, std::size_t k) {
    box.validate();
    if (k >= box.dim())
        throw ValidationError("bisect: dimension " + std::to_string(k) + " out of range");
    if (box.width(k) <= 0.0)
        throw ValidationError("bisect: dimension " + std::to_string(k) + " is degenerate");
    double mid = box.lower[k] + 0.5 * box.width(k);
    Hyperrectangle lo = box, hi = box;
    lo.upper[k] = mid;
    hi.lower[k] = mid;
    return {lo, hi};
}

std::optional<Polytope> intersect(const Polytope& p, const Polytope& q) {
    if (p.dim() != q.dim()) throw ValidationError("intersect: dimension mismatch");
    Polytope out;
    out.box.lower.resize(p.dim());
    out.box.upper.resize(p.dim());
    for (std::size_t k = 0; k < p.dim(); ++k) {
        out.box.lower[k] = std::max(p.box.lower[k], q.box.lower[k]);
        out.box.upper[k] = std::min(p.box.upper[k], q.box.upper[k]);
        if (out.box.lower[k] > out.box.upper[k]) return std::nullopt;
    }
    out.halfspaces = p.halfspaces;
    out.halfspaces.insert(out.halfspaces.end(), q.halfspaces.begin(), q.halfspaces.end());
    return out;
}

}  // namespace preimage
