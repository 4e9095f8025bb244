#include <algorithm>
#include <fstream>

#include "cdb/common/hash.hpp"
#include "cdb/harness/experiment.hpp"
#include "cdb/metrics/latent_io.hpp"
#include "cdb/models/checkpoint.hpp"
#include "cdb/scm/config.hpp"

namespace cdb::harness {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw HarnessConfigError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint64_t chain(std::uint64_t h, std::string_view piece) {
    h = fnv1a64(piece, h);
    return fnv1a64(std::string_view("\x1e", 1), h);
}

}  // namespace

metrics::LatentData encode_latents(models::ModelHandle& model,
                                   const models::BatchDataset& data) {
    const int m = model.cfg.latent_dim;
    const std::size_t B = 64;
    metrics::LatentData out;
    out.rows = data.n;
    out.cols = static_cast<std::size_t>(m);
    out.factor_names = data.factor_names;
    out.labels = data.labels;
    out.values.resize(data.n * m);
    const std::vector<float> eps(B * m, 0.0f);  // mean encoding
    for (std::size_t start = 0; start < data.n; start += B) {
        const int batch = static_cast<int>(std::min(B, data.n - start));
        const auto code =
            model.vae->encode(data.images.data() + start * data.numel(), batch, eps.data());
        for (int r = 0; r < batch; ++r)
            for (int d = 0; d < m; ++d)
                out.values[(start + r) * m + d] = code.mean[r * m + d];
    }
    return out;
}

ExportResult export_latents(models::ModelHandle& model,
                            const datagen::DatasetManifest& manifest,
                            const fs::path& out_dir) {
    auto data = models::load_training_set(manifest, 1.0f, 0);
    auto codes = encode_latents(model, data);

    fs::create_directories(out_dir);
    ExportResult res;
    res.rows = codes.rows;
    res.cols = codes.cols;
    res.matrix_path = out_dir / "latents.bin";
    res.table_path = out_dir / "labels.csv";
    metrics::write_latent_matrix(res.matrix_path, codes.values, codes.rows, codes.cols);

    std::vector<std::string> ids;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> names;
    for (const auto& f : manifest.graph.factors) names.push_back(f.name);
    for (const auto& rec : manifest.records) {
        ids.push_back(rec.id);
        std::vector<std::string> row;
        for (const auto& n : names) row.push_back(rec.assignment.at(n));
        rows.push_back(std::move(row));
    }
    metrics::write_label_table(res.table_path, ids, names, rows);
    return res;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const fs::path cache = cache_root(cfg);
    fs::create_directories(cfg.output_dir / "reports");
    RunResult result;
    auto note = [&](const StageHandle& h) {
        (h.rebuilt ? result.stages_built : result.stages_cached).push_back(h.id);
    };

    // ---- dataset stage ----------------------------------------------------
    scm::CausalGraphSpec graph = cfg.dataset.graph_path.empty()
                                     ? datagen::builtin_graph(cfg.dataset.renderer)
                                     : scm::load_graph(cfg.dataset.graph_path);
    graph.validate();
    std::vector<scm::ConstraintRule> conditioning;
    std::string conditioning_text;
    if (!cfg.dataset.conditioning_path.empty()) {
        conditioning = datagen::load_conditioning(cfg.dataset.conditioning_path);
        conditioning_text = slurp(cfg.dataset.conditioning_path);
    }

    std::uint64_t dkey = chain(0xcbf29ce484222325ULL, "dataset-v1");
    dkey = chain(dkey, scm::graph_to_json(graph));
    dkey = chain(dkey, cfg.dataset.renderer);
    dkey = chain(dkey, conditioning_text);
    dkey = chain(dkey, std::to_string(cfg.dataset.seed));
    dkey = chain(dkey, std::to_string(cfg.dataset.max_records));
    dkey = chain(dkey, std::to_string(cfg.dataset.image_size));

    const auto dstage = ensure_stage(cache, "dataset", dkey, [&](const fs::path& dir) {
        datagen::GenerateOptions opts;
        if (cfg.dataset.image_size > 0) {
            opts.render.width = cfg.dataset.image_size;
            opts.render.height = cfg.dataset.image_size;
        }
        opts.max_records = cfg.dataset.max_records;
        auto m = datagen::generate_dataset(graph, cfg.dataset.renderer, dir, cfg.dataset.seed,
                                           opts);
        if (!conditioning.empty()) {
            auto filtered = datagen::apply_confounded_filter(m, conditioning);
            datagen::save_manifest(filtered);  // replaces manifest.json in place
        }
    });
    note(dstage);
    const auto manifest = datagen::load_manifest(dstage.dir / "manifest.json");
    const std::uint64_t dataset_hash = hash_file(dstage.dir / "manifest.json");

    // ---- classifier stage -------------------------------------------------
    oracle::ClassifierConfig ccfg = cfg.classifier;
    std::uint64_t ckey = chain(dkey, "classifier-v1");
    ckey = chain(ckey, std::to_string(ccfg.epochs));
    ckey = chain(ckey, std::to_string(ccfg.lr));
    ckey = chain(ckey, std::to_string(ccfg.batch_size));
    ckey = chain(ckey, std::to_string(ccfg.base_channels));
    ckey = chain(ckey, std::to_string(ccfg.hidden_dim));
    ckey = chain(ckey, std::to_string(ccfg.holdout_fraction));
    ckey = chain(ckey, std::to_string(ccfg.seed));

    const auto cstage = ensure_stage(cache, "classifier", ckey, [&](const fs::path& dir) {
        auto data = models::load_training_set(manifest, 1.0f, 0);
        auto clf = oracle::train_classifier(data, manifest.graph, ccfg);
        clf.save((dir / "classifier.bin").string());
    });
    note(cstage);
    const auto clf = oracle::ClassifierHandle::load((cstage.dir / "classifier.bin").string());
    const std::uint64_t classifier_hash = hash_file(cstage.dir / "classifier.bin");

    const bool want_irs = std::count(cfg.metric_names.begin(), cfg.metric_names.end(), "irs");
    const bool want_uc = std::count(cfg.metric_names.begin(), cfg.metric_names.end(), "uc");
    const bool want_cg = std::count(cfg.metric_names.begin(), cfg.metric_names.end(), "cg");
    const bool want_dci =
        std::count(cfg.metric_names.begin(), cfg.metric_names.end(), "dci-d");

    // ---- per-(variant, seed) model + report stages ------------------------
    for (const auto& vspec : cfg.variants) {
        const auto variant = models::Variant::parse(vspec.name);
        for (std::uint64_t seed : cfg.seeds) {
            models::TrainConfig tcfg = vspec.train;
            tcfg.seed = seed;

            std::uint64_t tkey = chain(dkey, "model-v1");
            tkey = chain(tkey, variant.to_string());
            tkey = chain(tkey, tcfg.canonical_json());
            const auto tstage = ensure_stage(cache, "model", tkey, [&](const fs::path& dir) {
                auto data =
                    models::load_training_set(manifest, tcfg.supervision_fraction, seed);
                auto handle = models::make_model(variant, tcfg, data.image_size,
                                                 data.channels, data.cardinalities);
                auto outcome =
                    models::train_model(handle, data, (dir / "checkpoint.bin").string(),
                                        (dir / "train_log.jsonl").string());
                if (outcome.aborted_nan)
                    throw StageError("model/" + variant.to_string(),
                                     "training aborted on non-finite loss");
            });
            note(tstage);

            std::uint64_t rkey = chain(tkey, "report-v1");
            rkey = chain(rkey, std::to_string(ckey));
            rkey = chain(rkey, cfg.baseline);
            for (int r : cfg.rhos) rkey = chain(rkey, std::to_string(r));
            for (const auto& mname : cfg.metric_names) rkey = chain(rkey, mname);
            const auto rstage = ensure_stage(cache, "report", rkey, [&](const fs::path& dir) {
                auto loaded = models::load_checkpoint((tstage.dir / "checkpoint.bin").string());
                auto data = models::load_training_set(manifest, 1.0f, 0);
                auto codes = encode_latents(loaded.handle, data);

                metrics::MetricReport report;
                if (want_dci) report.dci_d = metrics::compute_dci_d(codes);
                if (want_irs || want_uc || want_cg) {
                    metrics::CgOptions cg_opts;
                    cg_opts.baseline = metrics::parse_baseline(cfg.baseline);
                    for (int rho : cfg.rhos) {
                        auto irs = metrics::compute_irs(codes, rho);
                        if (want_irs) report.irs = irs.score;
                        if (want_uc) report.uc[rho] = metrics::compute_uc(irs.map);
                        if (want_cg)
                            report.cg[rho] = metrics::compute_cg(*loaded.handle.vae, clf,
                                                                 codes, irs.map, cg_opts);
                    }
                }
                report.provenance = {hash_file(tstage.dir / "checkpoint.bin"),
                                     classifier_hash,
                                     dataset_hash,
                                     seed,
                                     variant.to_string(),
                                     cfg.dataset.name};
                report.save(dir / "report.json");
            });
            note(rstage);

            auto report = metrics::MetricReport::load(rstage.dir / "report.json");
            const fs::path pub = cfg.output_dir / "reports" /
                                 (variant.to_string() + "-seed" + std::to_string(seed) +
                                  ".json");
            report.save(pub);
            result.reports.push_back(std::move(report));
        }
    }
    return result;
}

}  // namespace cdb::harness
