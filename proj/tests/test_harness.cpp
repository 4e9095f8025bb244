#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cdb/datagen/image.hpp"
#include "cdb/harness/experiment.hpp"
#include "cdb/metrics/latent_io.hpp"
#include "cdb/models/checkpoint.hpp"

using namespace cdb::harness;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "cdb_harness_test";

std::string tiny_toy_config(const fs::path& out, std::uint64_t dataset_seed = 7,
                            int classifier_epochs = 12, bool with_cg = true) {
    std::string metrics = with_cg ? R"(["irs","uc","cg","dci-d"])" : R"(["irs","uc","dci-d"])";
    return std::string(R"({
      "name": "tiny-toy",
      "dataset": {"renderer": "toy", "name": "toy", "max_records": 60, "seed": )") +
           std::to_string(dataset_seed) + R"(},
      "classifier": {"epochs": )" +
           std::to_string(classifier_epochs) + R"(, "batch_size": 16,
                     "base_channels": 4, "hidden_dim": 32, "seed": 1},
      "variants": [{"name": "beta-vae",
                    "train": {"epochs": 2, "batch_size": 16, "latent_dim": 8,
                              "base_channels": 8, "hidden_dim": 32, "beta": 4.0}}],
      "rho": [1, 2],
      "metrics": )" +
           metrics + R"(,
      "seeds": [0],
      "output_dir": ")" +
           out.string() + R"("
    })";
}

bool any_starts_with(const std::vector<std::string>& v, const std::string& prefix) {
    for (const auto& s : v)
        if (s.rfind(prefix, 0) == 0) return true;
    return false;
}

}  // namespace

TEST_CASE("experiment config parsing and validation") {
    auto cfg = ExperimentConfig::from_json(tiny_toy_config(kWork / "o"));
    CHECK(cfg.dataset.renderer == "toy");
    CHECK(cfg.variants.size() == 1);
    CHECK(cfg.rhos == std::vector<int>{1, 2});
    CHECK(cfg.seeds == std::vector<std::uint64_t>{0});
    // round-trips through its own canonical form
    auto again = ExperimentConfig::from_json(cfg.canonical_json());
    CHECK(again.canonical_json() == cfg.canonical_json());

    CHECK_THROWS_AS(ExperimentConfig::from_json("{nope"), HarnessConfigError);
    // unknown variant fails before any compute
    std::string bad = tiny_toy_config(kWork / "o");
    bad.replace(bad.find("beta-vae"), 8, "mega-vae");
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), HarnessConfigError);
    std::string bad2 = tiny_toy_config(kWork / "o");
    bad2.replace(bad2.find("\"toy\""), 5, "\"voxel\"");
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad2), HarnessConfigError);
    auto no_seeds = ExperimentConfig::from_json(tiny_toy_config(kWork / "o"));
    no_seeds.seeds.clear();
    CHECK_THROWS_AS(no_seeds.validate(), HarnessConfigError);
}

TEST_CASE("cache root honors the environment override") {
    auto cfg = ExperimentConfig::from_json(tiny_toy_config(kWork / "o"));
    unsetenv(kCacheRootEnv);
    CHECK(cache_root(cfg) == cfg.output_dir / "cache");
    setenv(kCacheRootEnv, "/tmp/alt-cache", 1);
    CHECK(cache_root(cfg) == fs::path("/tmp/alt-cache"));
    unsetenv(kCacheRootEnv);
}

TEST_CASE("full pipeline runs, caches, and resumes idempotently") {
    fs::remove_all(kWork);
    unsetenv(kCacheRootEnv);
    auto cfg = ExperimentConfig::from_json(tiny_toy_config(kWork / "run1"));

    auto first = run_experiment(cfg);
    REQUIRE(first.reports.size() == 1);
    CHECK(any_starts_with(first.stages_built, "dataset/"));
    CHECK(any_starts_with(first.stages_built, "classifier/"));
    CHECK(any_starts_with(first.stages_built, "model/"));
    CHECK(any_starts_with(first.stages_built, "report/"));
    const auto& rep = first.reports.front();
    rep.validate();
    CHECK(rep.provenance.variant == "beta-vae");
    CHECK(rep.provenance.dataset == "toy");
    CHECK(rep.uc.count(1));
    CHECK(rep.uc.count(2));
    CHECK(rep.cg.count(1));
    CHECK(fs::exists(cfg.output_dir / "reports" / "beta-vae-seed0.json"));

    // rerun: zero retraining, identical reports
    auto second = run_experiment(cfg);
    CHECK(second.stages_built.empty());
    CHECK(second.stages_cached.size() == 4);
    CHECK(second.reports.front().to_json() == rep.to_json());

    // a dataset change invalidates everything downstream
    auto cfg2 = ExperimentConfig::from_json(tiny_toy_config(kWork / "run1", 8));
    auto third = run_experiment(cfg2);
    CHECK(any_starts_with(third.stages_built, "dataset/"));
    CHECK(any_starts_with(third.stages_built, "classifier/"));
    CHECK(third.stages_cached.empty());

    // a classifier-only change keeps the dataset and model cached
    auto cfg3 = ExperimentConfig::from_json(tiny_toy_config(kWork / "run1", 7, 13));
    auto fourth = run_experiment(cfg3);
    CHECK(any_starts_with(fourth.stages_cached, "dataset/"));
    CHECK(any_starts_with(fourth.stages_cached, "model/"));
    CHECK(any_starts_with(fourth.stages_built, "classifier/"));
    CHECK(any_starts_with(fourth.stages_built, "report/"));
}

TEST_CASE("latent export equals in-process encoding bit-exactly") {
    auto cfg = ExperimentConfig::from_json(tiny_toy_config(kWork / "run1"));
    // reuse the cached pipeline artifacts from the previous case
    auto run = run_experiment(cfg);
    fs::path model_dir, dataset_dir;
    for (const auto& id : run.stages_cached) {
        const auto slash = id.find('/');
        const fs::path dir = cache_root(cfg) / id.substr(0, slash) / id.substr(slash + 1);
        if (id.rfind("model/", 0) == 0) model_dir = dir;
        if (id.rfind("dataset/", 0) == 0) dataset_dir = dir;
    }
    REQUIRE(!model_dir.empty());
    auto manifest = cdb::datagen::load_manifest(dataset_dir / "manifest.json");
    auto loaded = cdb::models::load_checkpoint((model_dir / "checkpoint.bin").string());

    auto res = export_latents(loaded.handle, manifest, kWork / "export");
    CHECK(res.rows == manifest.size());
    CHECK(res.cols == 8);
    auto from_disk =
        cdb::metrics::load_latent_data(res.matrix_path, res.table_path, manifest.graph);
    auto data = cdb::models::load_training_set(manifest, 1.0f, 0);
    auto in_proc = encode_latents(loaded.handle, data);
    CHECK(from_disk.values == in_proc.values);
    CHECK(from_disk.labels == in_proc.labels);
    CHECK(from_disk.factor_names == in_proc.factor_names);
    const auto a = cdb::metrics::compute_irs(from_disk, 1);
    const auto b = cdb::metrics::compute_irs(in_proc, 1);
    CHECK(a.score == b.score);
    CHECK(a.map.entries == b.map.entries);
}

TEST_CASE("result table aggregation, rendering and plots") {
    using cdb::metrics::MetricReport;
    auto make = [](const std::string& variant, std::uint64_t seed, double irs, double uc1) {
        MetricReport r;
        r.irs = irs;
        r.dci_d = 0.5;
        r.uc = {{1, uc1}, {5, uc1 / 2}};
        r.cg = {{1, 0.25}};
        r.provenance = {1, 2, 3, seed, variant, "toy"};
        return r;
    };
    std::vector<MetricReport> reports{make("beta-vae", 0, 0.9, 0.2),
                                      make("beta-vae", 1, 0.8, 0.4),
                                      make("factor-vae", 0, 0.7, 0.6)};
    auto table = emit_table(reports, kWork / "tables");
    CHECK(table.row_labels == std::vector<std::string>{"beta-vae", "factor-vae"});
    CHECK(table.report_hashes.size() == 3);
    const std::string expected =
        "variant     IRS            DCI-D          UC@rho=1       UC@rho=5       "
        "CG@rho=1       CG@rho=5\n"
        "---------------------------------------------------------------------------"
        "----------------------\n"
        "beta-vae    0.850 ± 0.050  0.500 ± 0.000  0.300 ± 0.100  0.150 ± 0.050  "
        "0.250 ± 0.000  -       \n"
        "factor-vae  0.700          0.500          0.600          0.300          "
        "0.250          -       \n";
    CHECK(table.render() == expected);
    CHECK(fs::exists(kWork / "tables" / "table.txt"));
    auto plot = cdb::datagen::read_png(kWork / "tables" / "score_vs_rho.png");
    CHECK(plot.width == 480);
    CHECK(plot.height == 360);

    // single report -> single row
    auto single = emit_table({make("dip-vae-i", 0, 0.5, 0.5)});
    CHECK(single.row_labels.size() == 1);
    CHECK(single.cells[0][0] == "0.500");

    CHECK_THROWS_AS(emit_table({}), HarnessConfigError);
    auto other = make("beta-vae", 0, 0.9, 0.2);
    other.provenance.dataset = "grid";
    CHECK_THROWS_AS(emit_table({reports[0], other}), HarnessConfigError);
}

TEST_CASE("score-vs-epoch plot is written") {
    std::vector<PlotSeries> series{{"irs", {1, 2, 3, 4}, {0.2, 0.6, 0.9, 0.95}},
                                   {"recon", {1, 2, 3, 4}, {0.9, 0.5, 0.2, 0.1}}};
    plot_score_vs_epoch(kWork / "plots" / "score_vs_epoch.png", series);
    auto img = cdb::datagen::read_png(kWork / "plots" / "score_vs_epoch.png");
    CHECK(img.width == 480);
}
