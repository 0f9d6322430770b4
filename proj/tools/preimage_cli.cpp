// Command-line front end: approximate / verify / oracle.
//
// Exit codes: 0 on success (target coverage reached, property certified, or
// oracle finished), 2 when the iteration budget ran out first, 1 for usage,
// configuration, or file problems.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "preimage/errors.hpp"
#include "preimage/oracle.hpp"
#include "preimage/quantverify.hpp"
#include "preimage/refinement.hpp"
#include "preimage/serialize.hpp"

namespace fs = std::filesystem;
using namespace preimage;

namespace {

struct CommonOpts {
    std::string network;
    std::string format;
    std::string spec_path;
    std::string out_dir;
    std::string region_str;
    std::string input_polytope_path;
    double coverage = 0.9;
    std::size_t max_iters = 500;
    std::size_t samples = 10000;
    std::string split = "greedy";
    std::string select = "priority";
    std::string alpha_opt = "on";
    std::string alpha0 = "adaptive";
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    std::size_t max_hidden = 24;
};

Hyperrectangle parse_region(const std::string& s) {
    std::vector<double> vals;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        std::string tok = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (!tok.empty()) {
            try {
                std::size_t used = 0;
                vals.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ValidationError("--region: bad number '" + tok + "'");
            }
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (vals.empty() || vals.size() % 2 != 0)
        throw ValidationError("--region needs an even list: lo1,hi1,lo2,hi2,...");
    Hyperrectangle box;
    for (std::size_t i = 0; i < vals.size(); i += 2) {
        box.lower.push_back(vals[i]);
        box.upper.push_back(vals[i + 1]);
    }
    box.validate();
    return box;
}

RefinementConfig make_config(const CommonOpts& o) {
    RefinementConfig cfg;
    cfg.coverage_ratio = o.coverage;
    cfg.max_iters = o.max_iters;
    cfg.seed = o.seed;
    cfg.workers = o.workers;
    cfg.approx.loss.n_samples = o.samples;

    if (o.split == "greedy")
        cfg.split = SplitStrategy::Greedy;
    else if (o.split == "longest")
        cfg.split = SplitStrategy::LongestEdge;
    else if (o.split == "random")
        cfg.split = SplitStrategy::Random;
    else
        throw ValidationError("--split must be greedy, longest, or random");

    if (o.select == "priority")
        cfg.select = SelectStrategy::Priority;
    else if (o.select == "random")
        cfg.select = SelectStrategy::Random;
    else
        throw ValidationError("--select must be priority or random");

    if (o.alpha_opt == "on")
        cfg.approx.alpha_opt = true;
    else if (o.alpha_opt == "off")
        cfg.approx.alpha_opt = false;
    else
        throw ValidationError("--alpha-opt must be on or off");

    if (o.alpha0 == "adaptive") {
        cfg.approx.alpha_policy = AlphaPolicy::make_adaptive();
    } else {
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(o.alpha0, &used);
            if (used != o.alpha0.size()) throw std::invalid_argument(o.alpha0);
        } catch (const std::exception&) {
            throw ValidationError("--alpha0 must be 'adaptive' or a number in [0,1]");
        }
        if (!(v >= 0.0 && v <= 1.0))
            throw ValidationError("--alpha0 must be 'adaptive' or a number in [0,1]");
        cfg.approx.alpha_policy = AlphaPolicy::make_fixed(v);
    }
    return cfg;
}

// Root region plus conjoined rows from --region / --input-polytope.
std::pair<Hyperrectangle, std::vector<Halfspace>> resolve_input_set(const CommonOpts& o) {
    if (o.region_str.empty() == o.input_polytope_path.empty())
        throw ValidationError("exactly one of --region and --input-polytope is required");
    if (!o.region_str.empty()) return {parse_region(o.region_str), {}};
    Polytope ip = polytope_from_json_text(read_text_file(o.input_polytope_path));
    Hyperrectangle root = ip.halfspaces.empty() ? ip.box : outer_box(ip);
    return {root, ip.halfspaces};
}

void write_dup_outputs(const fs::path& out_dir, const DisjointPolytopeUnion& dup,
                       RunReport* report) {
    fs::create_directories(out_dir);
    fs::path dup_path = out_dir / "dup.json";
    write_text_file(dup_path.string(), dup_to_json(dup));
    std::printf("wrote %s (%zu polytopes)\n", dup_path.c_str(), dup.members.size());
    if (!dup.members.empty() && dup.members.front().dim() == 2) {
        fs::path csv_path = out_dir / "polytopes.csv";
        write_text_file(csv_path.string(), dup_plot_csv(dup));
        std::printf("wrote %s\n", csv_path.c_str());
    }
    if (report) {
        report->dup_path = dup_path.string();
        fs::path report_path = out_dir / "report.json";
        write_text_file(report_path.string(), report_to_json(*report));
        std::printf("wrote %s\n", report_path.c_str());
    }
}

int cmd_approximate(const CommonOpts& o) {
    Network net = load_network(o.network, o.format);
    OutputSpec spec = output_spec_from_json(read_text_file(o.spec_path));
    auto [root, input_rows] = resolve_input_set(o);
    RefinementConfig cfg = make_config(o);
    cfg.approx.input_rows = std::move(input_rows);

    RefinementState state(net, spec, root, cfg);
    state.run();

    DisjointPolytopeUnion dup = state.dup();
    RunReport report = state.report();
    write_dup_outputs(o.out_dir, dup, &report);
    std::printf("iterations=%zu coverage_est=%.4f target=%s%s\n", state.iterations(),
                state.coverage_est(), state.target_reached() ? "reached" : "missed",
                report.empty_preimage ? " (no preimage mass detected in the region)" : "");
    return state.target_reached() ? 0 : 2;
}

int cmd_verify(const CommonOpts& o) {
    Network net = load_network(o.network, o.format);
    QuantitativeProperty prop = property_from_json(read_text_file(o.spec_path));
    RefinementConfig cfg = make_config(o);

    Verdict v = verify(net, prop, cfg);
    fs::create_directories(o.out_dir);
    fs::path verdict_path = fs::path(o.out_dir) / "verdict.json";
    write_text_file(verdict_path.string(), verdict_to_json(v));
    std::printf("wrote %s\n", verdict_path.c_str());
    std::printf("verdict=%s certified_fraction=%.6f iterations=%zu exact_volume_calls=%zu\n",
                v.certified ? "True" : "Unknown", v.certified_fraction, v.iterations,
                v.exact_volume_calls);
    return v.certified ? 0 : 2;
}

int cmd_oracle(const CommonOpts& o) {
    Network net = load_network(o.network, o.format);
    OutputSpec spec = output_spec_from_json(read_text_file(o.spec_path));
    if (o.region_str.empty())
        throw ValidationError("oracle requires --region");
    Hyperrectangle region = parse_region(o.region_str);

    OracleConfig ocfg;
    ocfg.max_hidden = o.max_hidden;
    ocfg.workers = o.workers;
    DisjointPolytopeUnion dup = exact_preimage(net, spec, region, ocfg);
    double vol = 0.0;
    for (const Polytope& p : dup.members) vol += exact_volume(p, region.dim());

    write_dup_outputs(o.out_dir, dup, nullptr);
    std::printf("cells=%zu exact_volume=%.12g region_volume=%.12g\n", dup.members.size(), vol,
                region.volume());
    return 0;
}

void add_common_flags(CLI::App* cmd, CommonOpts& o, bool with_input_set, bool with_tuning) {
    cmd->add_option("--network", o.network, "network file")->required();
    cmd->add_option("--format", o.format, "network format: json or nnet (default: by extension)");
    cmd->add_option("--spec", o.spec_path, "specification file (JSON)")->required();
    cmd->add_option("--out", o.out_dir, "output directory")->required();
    cmd->add_option("--seed", o.seed, "random seed (default 0)");
    cmd->add_option("--workers", o.workers, "worker threads, 0 = hardware (default 0)");
    if (with_input_set) {
        cmd->add_option("--region", o.region_str, "input box: lo1,hi1,lo2,hi2,...");
        cmd->add_option("--input-polytope", o.input_polytope_path,
                        "input polytope file (JSON), alternative to --region");
    }
    if (with_tuning) {
        cmd->add_option("--coverage", o.coverage, "target coverage ratio (default 0.9)");
        cmd->add_option("--max-iters", o.max_iters, "refinement budget (default 500)");
        cmd->add_option("--samples", o.samples, "Monte-Carlo samples per region (default 10000)");
        cmd->add_option("--split", o.split, "split strategy: greedy|longest|random");
        cmd->add_option("--select", o.select, "subregion selection: priority|random");
        cmd->add_option("--alpha-opt", o.alpha_opt, "optimize relaxation slopes: on|off");
        cmd->add_option("--alpha0", o.alpha0, "initial slopes: adaptive or a value in [0,1]");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"preimage under-approximation for ReLU networks"};
    app.require_subcommand(1);

    CommonOpts ao, vo, oo;
    CLI::App* ap = app.add_subcommand("approximate",
                                      "anytime preimage under-approximation over a region");
    add_common_flags(ap, ao, true, true);
    CLI::App* vp = app.add_subcommand("verify", "quantitative property check (property JSON)");
    add_common_flags(vp, vo, false, true);
    CLI::App* op = app.add_subcommand("oracle", "exact preimage for small networks");
    add_common_flags(op, oo, true, false);
    op->add_option("--max-hidden", oo.max_hidden, "relu neuron cap (default 24)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (ap->parsed()) return cmd_approximate(ao);
        if (vp->parsed()) return cmd_verify(vo);
        if (op->parsed()) return cmd_oracle(oo);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const CapabilityError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
