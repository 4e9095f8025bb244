#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cdb/datagen/render.hpp"
#include "cdb/scm/graph.hpp"

namespace cdb::datagen {

struct EmptyFilterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ManifestEntry {
    std::string id;
    std::string image_path;     // relative to the manifest directory
    std::string metadata_path;  // relative to the manifest directory
    scm::FactorAssignment assignment;
    Bounds bounds;
};

struct DatasetManifest {
    std::string renderer;
    scm::CausalGraphSpec graph;
    std::vector<ManifestEntry> records;
    std::uint64_t seed = 0;
    int width = 0, height = 0;
    std::filesystem::path root;  // directory holding manifest.json

    std::size_t size() const { return records.size(); }
    std::filesystem::path image_file(const ManifestEntry& e) const { return root / e.image_path; }
    std::filesystem::path metadata_file(const ManifestEntry& e) const {
        return root / e.metadata_path;
    }
};

// Per-image ground truth, byte-exact Fig.-6 key set for candle-lite
// ("scene", "lights", "objects" / "object_type", "color", "size",
// "rotation", "bounds"). Other renderers reuse the same object-level schema
// with their own factor keys. Nuisance effects are never serialized.
std::string metadata_to_json(const std::string& renderer, const scm::FactorAssignment& a,
                             const Bounds& b);
// Inverse of metadata_to_json (assignment seed is not stored in metadata).
std::pair<scm::FactorAssignment, Bounds> parse_metadata(const std::string& renderer,
                                                        const std::string& json_text);

struct GenerateOptions {
    RenderOptions render;
    // Deterministic subsample of the enumerated support (0 = keep all).
    std::size_t max_records = 0;
    bool write_images = true;
};

// One PNG + one metadata JSON per record, plus manifest.json. Idempotent for
// fixed (graph, seed, options).
DatasetManifest generate_dataset(const scm::CausalGraphSpec& graph, const std::string& renderer,
                                 const std::filesystem::path& out_dir, std::uint64_t seed,
                                 const GenerateOptions& opts = {});

DatasetManifest load_manifest(const std::filesystem::path& manifest_path);
void save_manifest(const DatasetManifest& m);

// Keep-predicates use the ConstraintRule shape: a record survives iff its
// assignment matches at least one conjunction. Throws EmptyFilterError when
// nothing survives.
DatasetManifest apply_confounded_filter(const DatasetManifest& manifest,
                                        const std::vector<scm::ConstraintRule>& conditioning);
std::vector<scm::ConstraintRule> load_conditioning(const std::filesystem::path& path);

struct PairingQuery {
    enum class Mode { match, rank };
    Mode mode = Mode::match;
    std::vector<std::string> factors;
    std::string rank_factor;  // required in rank mode; order = declared value order
};

struct RecordPair {
    std::size_t first = 0, second = 0;  // indices into manifest.records
    int order = 0;  // rank mode: +1 first has larger rank value, -1 second, 0 tie
};

// Deterministic given seed; returns up to k pairs, empty when no pair
// satisfies the query.
std::vector<RecordPair> query_pairs(const DatasetManifest& manifest, const PairingQuery& q,
                                    std::size_t k, std::uint64_t seed);

}  // namespace cdb::datagen
