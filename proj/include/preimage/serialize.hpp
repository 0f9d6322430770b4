#pragma once

// JSON/CSV forms of the shared artifacts. All writers are canonical
// (sorted keys, fixed layout) so identical inputs produce identical bytes.

#include <string>

#include "preimage/geometry.hpp"
#include "preimage/model.hpp"
#include "preimage/quantverify.hpp"
#include "preimage/refinement.hpp"

namespace preimage {

std::string dup_to_json(const DisjointPolytopeUnion& dup);
DisjointPolytopeUnion dup_from_json(const std::string& text);

std::string report_to_json(const RunReport& report);
std::string verdict_to_json(const Verdict& verdict);

// standalone spec file: a JSON array of {"c": [...], "d": number}
OutputSpec output_spec_from_json(const std::string& text);
// {"input_set": {"box": {...}, "halfspaces": [...]}, "output_spec": [...], "p": number}
QuantitativeProperty property_from_json(const std::string& text);
// {"box": {"lower": [...], "upper": [...]}, "halfspaces": [{"a": [...], "b": n}]}
Polytope polytope_from_json_text(const std::string& text);

// 2-D plot data: one CSV row per vertex, vertices of each polytope ordered
// counterclockwise around its centroid.
std::string dup_plot_csv(const DisjointPolytopeUnion& dup);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace preimage
