#include "preimage/refinement.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "preimage/errors.hpp"
#include "preimage/parallel.hpp"

namespace preimage {

namespace {
// Branch labels for deriving child streams: every node's sampling and
// split-randomness streams hang off its own seed, so results do not depend
// on evaluation order or worker count.
constexpr std::uint64_t kBranchSamples = 1;
constexpr std::uint64_t kBranchSplitRng = 2;
constexpr std::uint64_t kBranchChildBase = 3;  // + 2*dim + side

// Greedy split scores below this spread apart are treated as a tie.
constexpr double kGreedyTieTol = 1e-12;

std::uint64_t child_seed(std::uint64_t parent, std::size_t dim, std::size_t side) {
    return mix_seed(parent, kBranchChildBase + 2 * dim + side);
}
}  // namespace

void RefinementConfig::validate() const {
    if (!(coverage_ratio > 0.0 && coverage_ratio <= 1.0))
        throw ValidationError("refinement: coverage ratio must be in (0, 1]");
    if (max_iters == 0) throw ValidationError("refinement: max_iters must be positive");
    if (target_volume && !(*target_volume >= 0.0))
        throw ValidationError("refinement: target volume must be non-negative");
    approx.loss.validate();
}

RefinementState::RefinementState(const Network& net, const OutputSpec& spec, Hyperrectangle root,
                                 RefinementConfig cfg)
    : net_(net),
      spec_(spec),
      cfg_(std::move(cfg)),
      root_(std::move(root)),
      select_rng_(mix_seed(cfg_.seed, kBranchSplitRng)),
      t_start_(std::chrono::steady_clock::now()) {
    cfg_.validate();
    root_.validate();
    net_.validate();
    spec_.validate(net_.output_dim());
    root_volume_ = root_.volume();
    if (root_volume_ <= 0.0)
        throw ValidationError("refinement: root region has zero volume");

    SubregionNode node;
    node.seq = next_seq_++;
    node.seed = mix_seed(cfg_.seed, 0);
    node.approx = approximate_region(net_, spec_, root_, cfg_.approx,
                                     mix_seed(node.seed, kBranchSamples));
    node.priority = node_priority(node.approx);
    est_preimage_volume_ = node.approx.est_preimage_frac * root_volume_;
    target_ = cfg_.target_volume ? *cfg_.target_volume
                                 : cfg_.coverage_ratio * est_preimage_volume_;
    report_.empty_preimage = est_preimage_volume_ == 0.0;
    leaves_.push_back(std::move(node));
    record_iteration();
}

double RefinementState::node_priority(const RegionApproximation& a) const {
    double gap = a.est_preimage_frac - a.est_polytope_frac;
    if (!(gap > 0.0)) gap = 0.0;
    return gap * (a.region.volume() / root_volume_);
}

double RefinementState::est_dup_volume() const {
    double v = 0.0;
    for (const SubregionNode& n : leaves_)
        v += n.approx.est_polytope_frac * n.approx.region.volume();
    return v;
}

double RefinementState::coverage_est() const {
    if (est_preimage_volume_ <= 0.0) return 1.0;
    return est_dup_volume() / est_preimage_volume_;
}

bool RefinementState::target_reached() const { return est_dup_volume() >= target_; }

DisjointPolytopeUnion RefinementState::dup() const {
    DisjointPolytopeUnion out;
    out.members.reserve(leaves_.size());
    for (const SubregionNode& n : leaves_) out.members.push_back(n.approx.polytope);
    return out;
}

std::size_t RefinementState::pick_leaf() {
    if (cfg_.select == SelectStrategy::Random)
        return static_cast<std::size_t>(select_rng_.next_u64() % leaves_.size());
    std::size_t best = 0;
    for (std::size_t i = 1; i < leaves_.size(); ++i)
        if (leaves_[i].priority > leaves_[best].priority) best = i;
    return best;  // leaves_ is in seq order, so the scan breaks ties low-seq
}

RefinementState::SplitChoice RefinementState::choose_split(const SubregionNode& node) const {
    const Hyperrectangle& region = node.approx.region;
    std::vector<std::size_t> dims;
    for (std::size_t k = 0; k < region.dim(); ++k)
        if (region.width(k) > 0.0) dims.push_back(k);
    if (dims.empty())
        throw ValidationError("refinement: every dimension of the region is degenerate");

    SplitChoice choice;
    switch (cfg_.split) {
        case SplitStrategy::LongestEdge: {
            choice.dim = dims[0];
            for (std::size_t k : dims)
                if (region.width(k) > region.width(choice.dim)) choice.dim = k;
            return choice;
        }
        case SplitStrategy::Random: {
            SeededSampler rng(mix_seed(node.seed, kBranchSplitRng));
            choice.dim = dims[rng.next_u64() % dims.size()];
            return choice;
        }
        case SplitStrategy::Greedy: break;
    }

    // Greedy: approximate both children of every splittable dimension and
    // keep the dimension whose children cover the most estimated volume.
    // Candidates are seeded per (node, dim, side), so the parallel evaluation
    // order cannot change any result.
    std::vector<RegionApproximation> cand(dims.size() * 2);
    parallel_for(cand.size(), cfg_.workers, [&](std::size_t t) {
        std::size_t k = dims[t / 2], side = t % 2;
        auto halves = bisect(region, k);
        const Hyperrectangle& sub = side == 0 ? halves.first : halves.second;
        std::uint64_t seed = child_seed(node.seed, k, side);
        cand[t] = approximate_region(net_, spec_, sub, cfg_.approx,
                                     mix_seed(seed, kBranchSamples),
                                     /*with_preimage_frac=*/false);
    });
    std::size_t best = 0;
    double best_score = -1.0, min_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dims.size(); ++i) {
        // children have equal volume, so the fraction sum is the score
        double score = cand[2 * i].est_polytope_frac + cand[2 * i + 1].est_polytope_frac;
        min_score = std::min(min_score, score);
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    // When every dimension scores the same there is no signal (typically all
    // children come back empty), and always taking the first dimension would
    // shave one axis into slivers while the others never shrink. Fall back to
    // the longest edge so the region contracts in every direction.
    if (best_score - min_score <= kGreedyTieTol) {
        for (std::size_t i = 0; i < dims.size(); ++i)
            if (region.width(dims[i]) > region.width(dims[best])) best = i;
    }
    choice.dim = dims[best];
    choice.children = std::make_pair(std::move(cand[2 * best]), std::move(cand[2 * best + 1]));
    return choice;
}

std::size_t RefinementState::select_split_feature(const SubregionNode& node) const {
    return choose_split(node).dim;
}

void RefinementState::record_iteration() {
    report_.iterations = iterations_;
    report_.coverage_est = coverage_est();
    report_.reached_target = target_reached();
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                          t_start_)
                    .count();
    report_.per_iteration.push_back({report_.coverage_est, leaves_.size(), ms});
}

void RefinementState::refine_step() {
    std::size_t idx = pick_leaf();
    SubregionNode node = std::move(leaves_[idx]);
    leaves_.erase(leaves_.begin() + static_cast<std::ptrdiff_t>(idx));

    SplitChoice choice = choose_split(node);
    auto halves = bisect(node.approx.region, choice.dim);

    std::pair<RegionApproximation, RegionApproximation> kids;
    std::uint64_t seeds[2] = {child_seed(node.seed, choice.dim, 0),
                              child_seed(node.seed, choice.dim, 1)};
    if (choice.children) {
        kids = std::move(*choice.children);
    } else {
        RegionApproximation slots[2];
        const Hyperrectangle* boxes[2] = {&halves.first, &halves.second};
        parallel_for(2, cfg_.workers, [&](std::size_t side) {
            slots[side] = approximate_region(net_, spec_, *boxes[side], cfg_.approx,
                                             mix_seed(seeds[side], kBranchSamples),
                                             /*with_preimage_frac=*/false);
        });
        kids = std::make_pair(std::move(slots[0]), std::move(slots[1]));
    }

    RegionApproximation* sides[2] = {&kids.first, &kids.second};
    parallel_for(2, cfg_.workers, [&](std::size_t side) {
        RegionApproximation& a = *sides[side];
        a.est_preimage_frac = estimate_preimage_fraction(
            net_, spec_, a.region, cfg_.approx.input_rows, cfg_.approx.loss.n_samples,
            a.sample_seed);
    });

    for (std::size_t side = 0; side < 2; ++side) {
        SubregionNode child;
        child.approx = std::move(*sides[side]);
        child.seed = seeds[side];
        child.seq = next_seq_++;
        child.priority = node_priority(child.approx);
        leaves_.push_back(std::move(child));
    }

    ++iterations_;
    record_iteration();
}

const RunReport& RefinementState::run() {
    while (!done()) refine_step();
    return report_;
}

}  // namespace preimage
