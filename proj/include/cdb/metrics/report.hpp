#pragma once

// The MetricReport artifact: one evaluated model against one dataset and
// classifier, with every score's provenance pinned by content hashes.

#include <filesystem>
#include <map>

#include "cdb/metrics/metrics.hpp"

namespace cdb::metrics {

struct Provenance {
    std::uint64_t model_hash = 0;
    std::uint64_t classifier_hash = 0;
    std::uint64_t dataset_hash = 0;
    std::uint64_t seed = 0;
    std::string variant;
    std::string dataset;
    bool operator==(const Provenance&) const = default;
};

struct MetricReport {
    double irs = 0.0;
    double dci_d = 0.0;
    std::map<int, double> uc;  // rho -> score
    std::map<int, double> cg;  // rho -> score
    Provenance provenance;

    // Scores must sit in [0,1]; throws MetricError otherwise.
    void validate() const;
    std::string to_json() const;
    static MetricReport from_json(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static MetricReport load(const std::filesystem::path& path);
};

}  // namespace cdb::metrics
