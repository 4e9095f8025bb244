#pragma once

#include <filesystem>
#include <string>

#include "cdb/scm/graph.hpp"

namespace cdb::scm {

// Graph config schema (JSON):
// {
//   "factors":  [{"name": "...", "values": ["...", ...]}, ...],
//   "rules":    [{"forbidden": {"factor": ["value", ...], ...},
//                 "reason": "..."}, ...],
//   "nuisance": [{"name": "...", "effect": "..."}, ...],
//   "seed":     0
// }
CausalGraphSpec parse_graph_json(const std::string& text);
CausalGraphSpec load_graph(const std::filesystem::path& path);
std::string graph_to_json(const CausalGraphSpec& graph);
void save_graph(const CausalGraphSpec& graph, const std::filesystem::path& path);

}  // namespace cdb::scm
