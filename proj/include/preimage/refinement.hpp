#pragma once

// Anytime refinement: keep a worklist of subregions tiling the root box,
// repeatedly split the most promising one and re-approximate the two halves.
// The union of per-region polytopes only ever grows in (true) volume, so the
// loop can stop at any iteration with a sound result.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "preimage/approximator.hpp"

namespace preimage {

enum class SplitStrategy { Greedy, LongestEdge, Random };
enum class SelectStrategy { Priority, Random };

struct RefinementConfig {
    double coverage_ratio = 0.9;  // stop when est. DUP volume reaches this
                                  // fraction of the estimated preimage volume
    std::size_t max_iters = 500;
    SplitStrategy split = SplitStrategy::Greedy;
    SelectStrategy select = SelectStrategy::Priority;
    std::size_t workers = 0;  // 0 = hardware concurrency
    std::uint64_t seed = 0;
    ApproximatorConfig approx;
    // Absolute volume target overriding coverage_ratio (quantitative runs).
    std::optional<double> target_volume;

    void validate() const;
};

struct SubregionNode {
    RegionApproximation approx;
    double priority = 0.0;
    std::uint64_t seq = 0;   // creation order; ties and output order
    std::uint64_t seed = 0;  // stream seed; children derive theirs from it
};

struct IterationStat {
    double coverage_est = 0.0;
    std::size_t n_polytopes = 0;
    double elapsed_ms = 0.0;  // cumulative since the run started
};

struct RunReport {
    std::size_t iterations = 0;
    std::vector<IterationStat> per_iteration;  // entry 0 is the root approximation
    double coverage_est = 0.0;
    bool reached_target = false;
    bool empty_preimage = false;
    std::string dup_path;
};

class RefinementState {
   public:
    // Approximates the root region (iteration entry 0 of the report).
    RefinementState(const Network& net, const OutputSpec& spec, Hyperrectangle root,
                    RefinementConfig cfg);

    // One select-split-approximate round.
    void refine_step();
    // Refine until the target volume is reached or the budget runs out.
    const RunReport& run();

    bool target_reached() const;
    bool budget_exhausted() const { return iterations_ >= cfg_.max_iters; }
    bool done() const { return target_reached() || budget_exhausted(); }

    std::size_t iterations() const { return iterations_; }
    double est_dup_volume() const;
    double est_preimage_volume() const { return est_preimage_volume_; }
    double target_volume() const { return target_; }
    double coverage_est() const;

    const std::vector<SubregionNode>& leaves() const { return leaves_; }
    DisjointPolytopeUnion dup() const;
    RunReport& report() { return report_; }
    const RunReport& report() const { return report_; }

    // Split dimension the configured strategy would choose for this node
    // (greedy evaluates candidate children and discards them).
    std::size_t select_split_feature(const SubregionNode& node) const;

   private:
    struct SplitChoice {
        std::size_t dim = 0;
        std::optional<std::pair<RegionApproximation, RegionApproximation>> children;
    };
    SplitChoice choose_split(const SubregionNode& node) const;
    std::size_t pick_leaf();
    double node_priority(const RegionApproximation& a) const;
    void record_iteration();

    Network net_;
    OutputSpec spec_;
    RefinementConfig cfg_;
    Hyperrectangle root_;
    double root_volume_ = 0.0;
    double est_preimage_volume_ = 0.0;
    double target_ = 0.0;
    std::vector<SubregionNode> leaves_;  // ascending seq
    std::uint64_t next_seq_ = 0;
    std::size_t iterations_ = 0;
    SeededSampler select_rng_;
    RunReport report_;
    std::chrono::steady_clock::time_point t_start_;
};

}  // namespace preimage
