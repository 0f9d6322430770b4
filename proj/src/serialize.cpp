#include "preimage/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "preimage/errors.hpp"

namespace preimage {

using nlohmann::json;

namespace {

json parse_or_throw(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string(what) + ": " + e.what());
    }
}

json box_to_json(const Hyperrectangle& box) {
    return json{{"lower", box.lower}, {"upper", box.upper}};
}

Hyperrectangle box_from_json(const json& j) {
    Hyperrectangle box;
    box.lower = j.at("lower").get<std::vector<double>>();
    box.upper = j.at("upper").get<std::vector<double>>();
    box.validate();
    return box;
}

json polytope_to_json(const Polytope& p) {
    json hs = json::array();
    for (const Halfspace& h : p.halfspaces) hs.push_back(json{{"a", h.a}, {"b", h.b}});
    return json{{"box", box_to_json(p.box)}, {"halfspaces", std::move(hs)}};
}

Polytope polytope_from_json(const json& j) {
    Polytope p;
    p.box = box_from_json(j.at("box"));
    if (j.contains("halfspaces")) {
        for (const json& jh : j.at("halfspaces")) {
            Halfspace h;
            h.a = jh.at("a").get<std::vector<double>>();
            h.b = jh.at("b").get<double>();
            p.halfspaces.push_back(std::move(h));
        }
    }
    p.validate();
    return p;
}

OutputSpec output_spec_from(const json& j) {
    if (!j.is_array() || j.empty())
        throw ValidationError("output spec: expected a non-empty JSON array of rows");
    OutputSpec spec;
    for (const json& jr : j) {
        OutputSpecRow r;
        r.c = jr.at("c").get<std::vector<double>>();
        r.d = jr.at("d").get<double>();
        spec.rows.push_back(std::move(r));
    }
    // the network's output width is unknown here; apply the row-local checks
    for (std::size_t i = 0; i < spec.rows.size(); ++i) {
        const OutputSpecRow& r = spec.rows[i];
        bool all_zero = true;
        for (double v : r.c) {
            if (!std::isfinite(v) || !std::isfinite(r.d))
                throw ValidationError("output spec: non-finite coefficient");
            if (v != 0.0) all_zero = false;
        }
        if (r.c.empty() || all_zero)
            throw ValidationError("output spec: row " + std::to_string(i) + " has all-zero c");
    }
    return spec;
}

}  // namespace

std::string dup_to_json(const DisjointPolytopeUnion& dup) {
    json j;
    j["polytopes"] = json::array();
    for (const Polytope& p : dup.members) j["polytopes"].push_back(polytope_to_json(p));
    return j.dump(2) + "\n";
}

DisjointPolytopeUnion dup_from_json(const std::string& text) {
    json j = parse_or_throw(text, "dup json");
    DisjointPolytopeUnion dup;
    for (const json& jp : j.at("polytopes")) dup.members.push_back(polytope_from_json(jp));
    return dup;
}

std::string report_to_json(const RunReport& report) {
    json j;
    j["iterations"] = report.iterations;
    j["coverage_est"] = report.coverage_est;
    j["reached_target"] = report.reached_target;
    j["empty_preimage"] = report.empty_preimage;
    j["dup_path"] = report.dup_path;
    j["per_iteration"] = json::array();
    for (const IterationStat& s : report.per_iteration)
        j["per_iteration"].push_back(json{{"coverage_est", s.coverage_est},
                                          {"n_polytopes", s.n_polytopes},
                                          {"elapsed_ms", s.elapsed_ms}});
    return j.dump(2) + "\n";
}

std::string verdict_to_json(const Verdict& v) {
    json j;
    j["verdict"] = v.certified ? "True" : "Unknown";
    j["certified_fraction"] = v.certified_fraction;
    j["iterations"] = v.iterations;
    j["exact_volume_calls"] = v.exact_volume_calls;
    return j.dump(2) + "\n";
}

OutputSpec output_spec_from_json(const std::string& text) {
    return output_spec_from(parse_or_throw(text, "output spec json"));
}

QuantitativeProperty property_from_json(const std::string& text) {
    json j = parse_or_throw(text, "property json");
    QuantitativeProperty prop;
    if (!j.contains("input_set") || !j.contains("output_spec") || !j.contains("p"))
        throw ValidationError("property json: need input_set, output_spec and p");
    prop.input_set = polytope_from_json(j.at("input_set"));
    prop.output_spec = output_spec_from(j.at("output_spec"));
    prop.p = j.at("p").get<double>();
    return prop;
}

Polytope polytope_from_json_text(const std::string& text) {
    return polytope_from_json(parse_or_throw(text, "polytope json"));
}

std::string dup_plot_csv(const DisjointPolytopeUnion& dup) {
    std::string out = "polytope,vertex,x1,x2\n";
    char buf[96];
    for (std::size_t pi = 0; pi < dup.members.size(); ++pi) {
        const Polytope& p = dup.members[pi];
        if (p.dim() != 2)
            throw CapabilityError("plot data is only produced for 2-D polytopes");
        std::vector<std::vector<double>> verts = enumerate_vertices(p);
        if (verts.empty()) continue;
        double cx = 0.0, cy = 0.0;
        for (const auto& v : verts) {
            cx += v[0];
            cy += v[1];
        }
        cx /= static_cast<double>(verts.size());
        cy /= static_cast<double>(verts.size());
        std::sort(verts.begin(), verts.end(),
                  [&](const std::vector<double>& a, const std::vector<double>& b) {
                      return std::atan2(a[1] - cy, a[0] - cx) < std::atan2(b[1] - cy, b[0] - cx);
                  });
        for (std::size_t vi = 0; vi < verts.size(); ++vi) {
            std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g\n", pi, vi, verts[vi][0],
                          verts[vi][1]);
            out += buf;
        }
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << text;
    if (!out) throw ValidationError("failed writing file: " + path);
}

}  // namespace preimage
