#pragma once

// On-disk latent export: a binary L x m float64 little-endian matrix with a
// self-describing JSON header, plus an aligned CSV label table (id column +
// one column per factor, values as declared strings). The pair is the
// interchange format for external metric consumers.

#include <filesystem>

#include "cdb/metrics/metrics.hpp"
#include "cdb/scm/graph.hpp"

namespace cdb::metrics {

struct LatentIoError : MetricError {
    using MetricError::MetricError;
};

void write_latent_matrix(const std::filesystem::path& path, const std::vector<double>& values,
                         std::size_t rows, std::size_t cols);
// Returns (rows, cols) and fills values.
std::pair<std::size_t, std::size_t> read_latent_matrix(const std::filesystem::path& path,
                                                       std::vector<double>& values);

void write_label_table(const std::filesystem::path& path,
                       const std::vector<std::string>& ids,
                       const std::vector<std::string>& factor_names,
                       const std::vector<std::vector<std::string>>& rows);
struct LabelTable {
    std::vector<std::string> ids;
    std::vector<std::string> factor_names;
    std::vector<std::vector<std::string>> rows;
};
LabelTable read_label_table(const std::filesystem::path& path);

// Loads matrix + table and resolves value strings to indices via the graph.
LatentData load_latent_data(const std::filesystem::path& matrix_path,
                            const std::filesystem::path& table_path,
                            const scm::CausalGraphSpec& graph);

}  // namespace cdb::metrics
