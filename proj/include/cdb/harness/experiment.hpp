#pragma once

// Experiment orchestration: a config-driven pipeline (generate -> train
// classifier -> train variants -> attribute + score) with content-addressed
// stage caching so interrupted or repeated runs never redo finished work.
// Every stage publishes atomically (temp dir + rename) into the cache root.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cdb/datagen/dataset.hpp"
#include "cdb/metrics/cg.hpp"
#include "cdb/metrics/report.hpp"
#include "cdb/models/train.hpp"
#include "cdb/oracle/classifier.hpp"

namespace cdb::harness {

// Invalid configuration: reported before any compute (CLI exit code 2).
struct HarnessConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// A pipeline stage failed; carries the stage identity. Upstream cache
// entries stay valid (CLI exit code 3).
struct StageError : std::runtime_error {
    std::string stage;
    StageError(std::string stage_id, const std::string& what)
        : std::runtime_error("stage '" + stage_id + "': " + what), stage(std::move(stage_id)) {}
};

struct DatasetSpec {
    std::string name;          // provenance label, defaults to the renderer
    std::string renderer;      // "toy" | "candle-lite" | "grid"
    std::string graph_path;    // empty -> the renderer's built-in graph
    std::string conditioning_path;  // optional keep-rule filter file
    std::size_t max_records = 0;    // deterministic subsample cap (0 = all)
    int image_size = 0;             // 0 -> renderer default
    std::uint64_t seed = 0;
};

struct VariantSpec {
    std::string name;  // parsed by models::Variant::parse
    models::TrainConfig train;
};

struct ExperimentConfig {
    std::string name;
    DatasetSpec dataset;
    oracle::ClassifierConfig classifier;
    std::vector<VariantSpec> variants;
    std::vector<int> rhos = {1};
    std::vector<std::string> metric_names = {"irs", "uc", "cg", "dci-d"};
    std::vector<std::uint64_t> seeds = {0, 1, 2};
    std::string baseline = "max-dev";
    std::filesystem::path output_dir;

    void validate() const;  // throws HarnessConfigError
    std::string canonical_json() const;
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
};

// Standalone config parsers shared with the CLI (throw HarnessConfigError).
models::TrainConfig parse_train_config(const std::string& json_text);
oracle::ClassifierConfig parse_classifier_config(const std::string& json_text);

// Env override for the shared stage cache; defaults to <output_dir>/cache.
inline constexpr const char* kCacheRootEnv = "CDBENCH_CACHE_ROOT";
std::filesystem::path cache_root(const ExperimentConfig& cfg);

// fnv1a of a file's bytes (provenance hashes for artifacts).
std::uint64_t hash_file(const std::filesystem::path& path);

// A completed cache stage: its directory plus whether this call built it.
struct StageHandle {
    std::filesystem::path dir;
    std::string id;       // e.g. "dataset/3fa2..."
    bool rebuilt = false;
};

// Runs `build` into a temp dir and renames it into place unless the stage
// is already published. `build` must treat its argument as the final dir.
StageHandle ensure_stage(const std::filesystem::path& cache, const std::string& kind,
                         std::uint64_t key,
                         const std::function<void(const std::filesystem::path&)>& build);

struct RunResult {
    std::vector<metrics::MetricReport> reports;
    std::vector<std::string> stages_built;   // stage ids executed this run
    std::vector<std::string> stages_cached;  // stage ids reused from cache
};

// Full pipeline: dataset -> classifier -> per-(variant, seed) checkpoints
// -> reports. Idempotent and resumable; a rerun of a finished experiment
// performs no training and returns identical reports.
RunResult run_experiment(const ExperimentConfig& cfg);

struct ExportResult {
    std::filesystem::path matrix_path;
    std::filesystem::path table_path;
    std::size_t rows = 0, cols = 0;
};

// Posterior-mean codes for every manifest record, written in the metric
// module's interchange format (float64 matrix + CSV label table).
ExportResult export_latents(models::ModelHandle& model,
                            const datagen::DatasetManifest& manifest,
                            const std::filesystem::path& out_dir);

// Posterior-mean codes as an in-memory LatentData (same values the export
// writes to disk).
metrics::LatentData encode_latents(models::ModelHandle& model,
                                   const models::BatchDataset& data);

struct ResultTable {
    std::vector<std::string> row_labels;     // variant names
    std::vector<std::string> column_labels;  // metric / metric@rho
    std::vector<std::vector<std::string>> cells;  // formatted mean (± spread)
    std::vector<std::uint64_t> report_hashes;     // provenance of every cell
    std::string render() const;
};

// Aggregates per-seed reports (mean ± spread when several seeds share a
// variant). All reports must name the same dataset; empty input is an
// error. Writes table.txt and the score-vs-rho plot when out_dir is given.
ResultTable emit_table(const std::vector<metrics::MetricReport>& reports,
                       const std::filesystem::path& out_dir = {});

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
};

// Minimal line plot (axes + polylines) written as a PNG.
void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::vector<PlotSeries>& series);
// Score-versus-epoch figure from (epoch, score) samples of one training run.
void plot_score_vs_epoch(const std::filesystem::path& path,
                         const std::vector<PlotSeries>& series);

}  // namespace cdb::harness
