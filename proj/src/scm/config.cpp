#include "cdb/scm/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cdb::scm {

using nlohmann::json;

CausalGraphSpec parse_graph_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("graph config is not valid JSON: ") + e.what());
    }
    CausalGraphSpec g;
    try {
        for (const auto& jf : j.at("factors")) {
            FactorSpec f;
            f.name = jf.at("name").get<std::string>();
            f.values = jf.at("values").get<std::vector<std::string>>();
            g.factors.push_back(std::move(f));
        }
        for (const auto& jr : j.value("rules", json::array())) {
            ConstraintRule r;
            for (const auto& [factor, vals] : jr.at("forbidden").items())
                r.predicates.push_back({factor, vals.get<std::vector<std::string>>()});
            r.reason = jr.value("reason", "");
            g.observed_rules.push_back(std::move(r));
        }
        for (const auto& jn : j.value("nuisance", json::array()))
            g.nuisance.push_back({jn.at("name").get<std::string>(),
                                  jn.at("effect").get<std::string>()});
        g.seed = j.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw SchemaError(std::string("graph config schema error: ") + e.what());
    }
    g.validate();
    return g;
}

CausalGraphSpec load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open graph config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_graph_json(ss.str());
}

std::string graph_to_json(const CausalGraphSpec& graph) {
    json j;
    j["factors"] = json::array();
    for (const auto& f : graph.factors)
        j["factors"].push_back({{"name", f.name}, {"values", f.values}});
    j["rules"] = json::array();
    for (const auto& r : graph.observed_rules) {
        json forbidden = json::object();
        for (const auto& pred : r.predicates) forbidden[pred.factor] = pred.values;
        j["rules"].push_back({{"forbidden", forbidden}, {"reason", r.reason}});
    }
    j["nuisance"] = json::array();
    for (const auto& n : graph.nuisance)
        j["nuisance"].push_back({{"name", n.name}, {"effect", n.effect}});
    j["seed"] = graph.seed;
    return j.dump(2);
}

void save_graph(const CausalGraphSpec& graph, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write graph config " + path.string());
    out << graph_to_json(graph) << "\n";
}

}  // namespace cdb::scm
