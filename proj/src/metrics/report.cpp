#include "cdb/metrics/report.hpp"

#include <fstream>

#include <json.hpp>

namespace cdb::metrics {

void MetricReport::validate() const {
    auto in_range = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_range(irs) || !in_range(dci_d))
        throw MetricError("score out of [0,1] range in report");
    for (const auto& [rho, v] : uc)
        if (rho < 1 || !in_range(v)) throw MetricError("bad unconfoundedness entry");
    for (const auto& [rho, v] : cg)
        if (rho < 1 || !in_range(v)) throw MetricError("bad counterfactual entry");
}

std::string MetricReport::to_json() const {
    nlohmann::json j;
    j["irs"] = irs;
    j["dci_d"] = dci_d;
    j["uc"] = nlohmann::json::object();
    for (const auto& [rho, v] : uc) j["uc"][std::to_string(rho)] = v;
    j["cg"] = nlohmann::json::object();
    for (const auto& [rho, v] : cg) j["cg"][std::to_string(rho)] = v;
    j["provenance"] = {{"model_hash", provenance.model_hash},
                       {"classifier_hash", provenance.classifier_hash},
                       {"dataset_hash", provenance.dataset_hash},
                       {"seed", provenance.seed},
                       {"variant", provenance.variant},
                       {"dataset", provenance.dataset}};
    return j.dump(2);
}

MetricReport MetricReport::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    MetricReport r;
    r.irs = j.at("irs");
    r.dci_d = j.at("dci_d");
    for (const auto& [k, v] : j.at("uc").items()) r.uc[std::stoi(k)] = v.get<double>();
    for (const auto& [k, v] : j.at("cg").items()) r.cg[std::stoi(k)] = v.get<double>();
    const auto& p = j.at("provenance");
    r.provenance.model_hash = p.at("model_hash");
    r.provenance.classifier_hash = p.at("classifier_hash");
    r.provenance.dataset_hash = p.at("dataset_hash");
    r.provenance.seed = p.at("seed");
    r.provenance.variant = p.at("variant");
    r.provenance.dataset = p.at("dataset");
    return r;
}

void MetricReport::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os) throw MetricError("cannot write report: " + path.string());
        os << to_json() << "\n";
    }
    std::filesystem::rename(tmp, path);
}

MetricReport MetricReport::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw MetricError("cannot open report: " + path.string());
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return from_json(text);
}

}  // namespace cdb::metrics
