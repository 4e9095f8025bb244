// cdbench: generate confounded synthetic datasets, train the model zoo,
// and score causal disentanglement metrics. Exit codes: 0 success,
// 2 configuration error, 3 stage failure.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "cdb/datagen/dataset.hpp"
#include "cdb/harness/experiment.hpp"
#include "cdb/metrics/latent_io.hpp"
#include "cdb/models/checkpoint.hpp"
#include "cdb/scm/config.hpp"

namespace fs = std::filesystem;
using namespace cdb;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw harness::HarnessConfigError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

scm::CausalGraphSpec resolve_graph(const std::string& graph_path, const std::string& renderer) {
    if (!graph_path.empty()) return scm::load_graph(graph_path);
    if (!datagen::renderer_known(renderer))
        throw harness::HarnessConfigError("unknown renderer '" + renderer + "'");
    return datagen::builtin_graph(renderer);
}

struct LoadedModel {
    models::LoadedCheckpoint ckpt;
    datagen::DatasetManifest manifest;
    models::BatchDataset data;
    metrics::LatentData codes;
};

LoadedModel load_model_and_codes(const std::string& model_path, const std::string& manifest_path) {
    LoadedModel lm{models::load_checkpoint(model_path), datagen::load_manifest(manifest_path),
                   {}, {}};
    lm.data = models::load_training_set(lm.manifest, 1.0f, 0);
    lm.codes = harness::encode_latents(lm.ckpt.handle, lm.data);
    return lm;
}

struct GenOpts {
            std::string graph, renderer = "toy", out;
            std::uint64_t seed = 0;
            std::size_t max_records = 0;
            int size = 0;
        };
struct FiltOpts {
            std::string manifest, conditioning, out;
        };
struct PairOpts {
            std::string manifest, mode = "match", rank_factor;
            std::vector<std::string> factors;
            std::size_t k = 10;
            std::uint64_t seed = 0;
        };
struct TrainOpts {
            std::string variant = "beta-vae", dataset, config, checkpoint, log;
            std::int64_t seed = -1;
        };
struct OracleTrainOpts {
            std::string dataset, out, config;
        };
struct EvalOpts {
            std::string dataset, classifier;
        };
struct MetricsOpts {
            std::string model, classifier, dataset, baseline = "max-dev", out;
            std::vector<int> rhos = {1};
        };
struct RunOpts {
            std::string config;
        };
struct ReportOpts {
            std::string reports_dir, out;
        };

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cdbench: confounded-dataset causal disentanglement benchmark"};
    app.require_subcommand(1);
    std::function<void()> action;

    // ---- datagen ----------------------------------------------------------
    auto* datagen_cmd = app.add_subcommand("datagen", "dataset generation and filtering");
    datagen_cmd->require_subcommand(1);
    {
        auto* gen = datagen_cmd->add_subcommand("generate", "render a dataset from a graph");
        auto opts_genopts = std::make_shared<GenOpts>();
        gen->add_option("--graph", opts_genopts->graph, "graph config JSON (default: built-in)");
        gen->add_option("--renderer", opts_genopts->renderer, "toy | candle-lite | grid");
        gen->add_option("--out", opts_genopts->out, "output directory")->required();
        gen->add_option("--seed", opts_genopts->seed, "dataset seed");
        gen->add_option("--max-records", opts_genopts->max_records, "subsample cap (0 = all)");
        gen->add_option("--size", opts_genopts->size, "image side override");
        gen->callback([opts_genopts, &action] {
            action = [opts_genopts] {
                auto graph = resolve_graph(opts_genopts->graph, opts_genopts->renderer);
                datagen::GenerateOptions g;
                g.max_records = opts_genopts->max_records;
                if (opts_genopts->size > 0) g.render.width = g.render.height = opts_genopts->size;
                auto m = datagen::generate_dataset(graph, opts_genopts->renderer, opts_genopts->out,
                                                   opts_genopts->seed, g);
                std::cout << "wrote " << m.size() << " records to " << m.root.string()
                          << "\n";
            };
        });

        auto* filt = datagen_cmd->add_subcommand("filter", "apply conditioning keep-rules");
        auto opts_filtopts = std::make_shared<FiltOpts>();
        filt->add_option("--manifest", opts_filtopts->manifest, "input manifest.json")->required();
        filt->add_option("--conditioning", opts_filtopts->conditioning, "keep-rule config")
            ->required();
        filt->add_option("--out", opts_filtopts->out, "output directory for the filtered manifest")
            ->required();
        filt->callback([opts_filtopts, &action] {
            action = [opts_filtopts] {
                auto m = datagen::load_manifest(opts_filtopts->manifest);
                auto rules = datagen::load_conditioning(opts_filtopts->conditioning);
                auto f = datagen::apply_confounded_filter(m, rules);
                fs::create_directories(opts_filtopts->out);
                for (auto& rec : f.records) {
                    rec.image_path =
                        fs::relative(m.root / rec.image_path, opts_filtopts->out).string();
                    rec.metadata_path =
                        fs::relative(m.root / rec.metadata_path, opts_filtopts->out).string();
                }
                f.root = opts_filtopts->out;
                datagen::save_manifest(f);
                std::cout << "kept " << f.size() << " of " << m.size() << " records\n";
            };
        });

        auto* pairs = datagen_cmd->add_subcommand("pairs", "query record pairs");
        auto opts_pairopts = std::make_shared<PairOpts>();
        pairs->add_option("--manifest", opts_pairopts->manifest)->required();
        pairs->add_option("--mode", opts_pairopts->mode, "match | rank");
        pairs->add_option("--factors", opts_pairopts->factors, "factors that must agree");
        pairs->add_option("--rank-factor", opts_pairopts->rank_factor, "factor ordered in rank mode");
        pairs->add_option("--k", opts_pairopts->k, "max pairs");
        pairs->add_option("--seed", opts_pairopts->seed);
        pairs->callback([opts_pairopts, &action] {
            action = [opts_pairopts] {
                auto m = datagen::load_manifest(opts_pairopts->manifest);
                datagen::PairingQuery q;
                if (opts_pairopts->mode == "match")
                    q.mode = datagen::PairingQuery::Mode::match;
                else if (opts_pairopts->mode == "rank")
                    q.mode = datagen::PairingQuery::Mode::rank;
                else
                    throw harness::HarnessConfigError("mode must be match or rank");
                q.factors = opts_pairopts->factors;
                q.rank_factor = opts_pairopts->rank_factor;
                for (const auto& p : datagen::query_pairs(m, q, opts_pairopts->k, opts_pairopts->seed))
                    std::cout << "{\"first\": \"" << m.records[p.first].id
                              << "\", \"second\": \"" << m.records[p.second].id
                              << "\", \"order\": " << p.order << "}\n";
            };
        });
    }

    // ---- models -----------------------------------------------------------
    auto* models_cmd = app.add_subcommand("models", "train generative model variants");
    models_cmd->require_subcommand(1);
    {
        auto* train = models_cmd->add_subcommand("train", "train one variant");
        auto opts_trainopts = std::make_shared<TrainOpts>();
        train->add_option("--variant", opts_trainopts->variant, "model variant name");
        train->add_option("--dataset", opts_trainopts->dataset, "manifest.json")->required();
        train->add_option("--config", opts_trainopts->config, "train config JSON file");
        train->add_option("--checkpoint", opts_trainopts->checkpoint, "checkpoint path")->required();
        train->add_option("--log", opts_trainopts->log, "JSONL epoch log path");
        train->add_option("--seed", opts_trainopts->seed, "override config seed");
        train->callback([opts_trainopts, &action] {
            action = [opts_trainopts] {
                auto variant = models::Variant::parse(opts_trainopts->variant);
                models::TrainConfig cfg;
                if (!opts_trainopts->config.empty())
                    cfg = harness::parse_train_config(slurp(opts_trainopts->config));
                if (opts_trainopts->seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts_trainopts->seed);
                auto manifest = datagen::load_manifest(opts_trainopts->dataset);
                auto data = models::load_training_set(manifest, cfg.supervision_fraction,
                                                      cfg.seed);
                models::ModelHandle handle =
                    fs::exists(opts_trainopts->checkpoint)
                        ? std::move(models::load_checkpoint(opts_trainopts->checkpoint).handle)
                        : models::make_model(variant, cfg, data.image_size, data.channels,
                                             data.cardinalities);
                auto outcome = models::train_model(handle, data, opts_trainopts->checkpoint, opts_trainopts->log);
                if (outcome.aborted_nan)
                    throw std::runtime_error("training aborted on non-finite loss");
                for (const auto& e : outcome.log)
                    std::cout << "epoch " << e.epoch << " total " << e.total << " recon "
                              << e.recon << "\n";
            };
        });
    }

    // ---- oracle -----------------------------------------------------------
    auto* oracle_cmd = app.add_subcommand("oracle", "factor classifier training/evaluation");
    oracle_cmd->require_subcommand(1);
    {
        auto* train = oracle_cmd->add_subcommand("train", "train the factor classifier");
        auto opts_oracletrainopts = std::make_shared<OracleTrainOpts>();
        train->add_option("--dataset", opts_oracletrainopts->dataset, "manifest.json")->required();
        train->add_option("--out", opts_oracletrainopts->out, "classifier checkpoint path")->required();
        train->add_option("--config", opts_oracletrainopts->config, "classifier config JSON file");
        train->callback([opts_oracletrainopts, &action] {
            action = [opts_oracletrainopts] {
                oracle::ClassifierConfig cfg;
                if (!opts_oracletrainopts->config.empty())
                    cfg = harness::parse_classifier_config(slurp(opts_oracletrainopts->config));
                auto manifest = datagen::load_manifest(opts_oracletrainopts->dataset);
                auto data = models::load_training_set(manifest, 1.0f, 0);
                auto clf = oracle::train_classifier(data, manifest.graph, cfg);
                clf.save(opts_oracletrainopts->out);
                for (const auto& [factor, acc] : clf.validation_accuracy())
                    std::cout << factor << ": " << acc << "\n";
            };
        });

        auto* eval = oracle_cmd->add_subcommand("eval", "per-factor accuracy on a manifest");
        auto opts_evalopts = std::make_shared<EvalOpts>();
        eval->add_option("--dataset", opts_evalopts->dataset)->required();
        eval->add_option("--classifier", opts_evalopts->classifier)->required();
        eval->callback([opts_evalopts, &action] {
            action = [opts_evalopts] {
                auto clf = oracle::ClassifierHandle::load(opts_evalopts->classifier);
                auto manifest = datagen::load_manifest(opts_evalopts->dataset);
                auto data = models::load_training_set(manifest, 1.0f, 0);
                const std::size_t nf = data.factor_names.size();
                std::vector<std::size_t> hits(nf, 0);
                for (std::size_t r = 0; r < data.n; ++r) {
                    auto probs = clf.predict(data.images.data() + r * data.numel(),
                                             data.image_size);
                    for (std::size_t f = 0; f < nf; ++f) {
                        const auto& p = probs.probs.at(data.factor_names[f]);
                        const auto best = std::max_element(p.begin(), p.end()) - p.begin();
                        hits[f] += best == data.labels[r * nf + f];
                    }
                }
                for (std::size_t f = 0; f < nf; ++f)
                    std::cout << data.factor_names[f] << ": "
                              << double(hits[f]) / double(data.n) << "\n";
            };
        });
    }

    // ---- metrics ----------------------------------------------------------
    auto* metrics_cmd = app.add_subcommand("metrics", "score a trained model");
    metrics_cmd->require_subcommand(1);
    {
        auto* run = metrics_cmd->add_subcommand("run", "emit a metric report");
        auto opts_metricsopts = std::make_shared<MetricsOpts>();
        run->add_option("--model", opts_metricsopts->model, "model checkpoint")->required();
        run->add_option("--classifier", opts_metricsopts->classifier, "classifier checkpoint")
            ->required();
        run->add_option("--dataset", opts_metricsopts->dataset, "manifest.json")->required();
        run->add_option("--rho", opts_metricsopts->rhos, "latent dims attributed per factor");
        run->add_option("--baseline", opts_metricsopts->baseline, "max-dev | zero | mean");
        run->add_option("--out", opts_metricsopts->out, "also write the report JSON here");
        run->callback([opts_metricsopts, &action] {
            action = [opts_metricsopts] {
                metrics::CgOptions cg_opts;
                cg_opts.baseline = metrics::parse_baseline(opts_metricsopts->baseline);
                auto lm = load_model_and_codes(opts_metricsopts->model, opts_metricsopts->dataset);
                auto clf = oracle::ClassifierHandle::load(opts_metricsopts->classifier);

                metrics::MetricReport report;
                report.dci_d = metrics::compute_dci_d(lm.codes);
                for (int rho : opts_metricsopts->rhos) {
                    auto irs = metrics::compute_irs(lm.codes, rho);
                    report.irs = irs.score;
                    report.uc[rho] = metrics::compute_uc(irs.map);
                    report.cg[rho] = metrics::compute_cg(*lm.ckpt.handle.vae, clf, lm.codes,
                                                         irs.map, cg_opts);
                }
                report.provenance = {harness::hash_file(opts_metricsopts->model),
                                     harness::hash_file(opts_metricsopts->classifier),
                                     harness::hash_file(opts_metricsopts->dataset),
                                     lm.ckpt.handle.cfg.seed,
                                     lm.ckpt.handle.variant.to_string(),
                                     lm.manifest.renderer};
                if (!opts_metricsopts->out.empty()) report.save(opts_metricsopts->out);
                std::cout << report.to_json() << "\n";
            };
        });
    }

    // ---- run / report -----------------------------------------------------
    {
        auto* run = app.add_subcommand("run", "execute a full experiment config");
        auto opts_runopts = std::make_shared<RunOpts>();
        run->add_option("--config", opts_runopts->config, "experiment config JSON")->required();
        run->callback([opts_runopts, &action] {
            action = [opts_runopts] {
                auto cfg = harness::ExperimentConfig::load(opts_runopts->config);
                auto result = harness::run_experiment(cfg);
                auto table = harness::emit_table(result.reports, cfg.output_dir / "tables");
                std::cout << table.render() << "stages built: "
                          << result.stages_built.size()
                          << ", cached: " << result.stages_cached.size() << "\n";
            };
        });

        auto* rep = app.add_subcommand("report", "aggregate stored reports into a table");
        auto opts_reportopts = std::make_shared<ReportOpts>();
        rep->add_option("--reports", opts_reportopts->reports_dir, "directory of report JSON files")
            ->required();
        rep->add_option("--out", opts_reportopts->out, "table/plot output directory");
        rep->callback([opts_reportopts, &action] {
            action = [opts_reportopts] {
                std::vector<fs::path> files;
                for (const auto& e : fs::directory_iterator(opts_reportopts->reports_dir))
                    if (e.path().extension() == ".json") files.push_back(e.path());
                std::sort(files.begin(), files.end());
                std::vector<metrics::MetricReport> reports;
                for (const auto& f : files)
                    reports.push_back(metrics::MetricReport::load(f));
                auto table = harness::emit_table(reports, opts_reportopts->out);
                std::cout << table.render();
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        action();
        return 0;
    } catch (const harness::HarnessConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const scm::SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const models::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const harness::StageError& e) {
        std::cerr << "stage failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 3;
    }
}
