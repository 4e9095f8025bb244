#include <fstream>

#include <json.hpp>

#include "cdb/harness/experiment.hpp"

namespace cdb::harness {

namespace {

using nlohmann::json;

template <typename T>
void read_to(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw HarnessConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

models::TrainConfig parse_train(const json& j) {
    models::TrainConfig t;
    read_to(j, "batch_size", t.batch_size);
    read_to(j, "latent_dim", t.latent_dim);
    read_to(j, "beta", t.beta);
    read_to(j, "gamma", t.gamma);
    read_to(j, "lambda_d", t.lambda_d);
    read_to(j, "lambda_od", t.lambda_od);
    read_to(j, "supervised_weight", t.supervised_weight);
    read_to(j, "supervision_fraction", t.supervision_fraction);
    read_to(j, "lambda_bb", t.lambda_bb);
    read_to(j, "epochs", t.epochs);
    read_to(j, "lr", t.lr);
    read_to(j, "disc_lr", t.disc_lr);
    read_to(j, "base_channels", t.base_channels);
    read_to(j, "hidden_dim", t.hidden_dim);
    read_to(j, "seed", t.seed);
    return t;
}

json classifier_json(const oracle::ClassifierConfig& c) {
    return json{{"epochs", c.epochs},         {"lr", c.lr},
                {"batch_size", c.batch_size}, {"base_channels", c.base_channels},
                {"hidden_dim", c.hidden_dim}, {"holdout_fraction", c.holdout_fraction},
                {"seed", c.seed}};
}

oracle::ClassifierConfig parse_classifier(const json& c) {
    oracle::ClassifierConfig cfg;
    read_to(c, "epochs", cfg.epochs);
    read_to(c, "lr", cfg.lr);
    read_to(c, "batch_size", cfg.batch_size);
    read_to(c, "base_channels", cfg.base_channels);
    read_to(c, "hidden_dim", cfg.hidden_dim);
    read_to(c, "holdout_fraction", cfg.holdout_fraction);
    read_to(c, "seed", cfg.seed);
    return cfg;
}

json parse_or_throw(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw HarnessConfigError(std::string("invalid ") + what + " JSON: " + e.what());
    }
}

}  // namespace

models::TrainConfig parse_train_config(const std::string& json_text) {
    auto t = parse_train(parse_or_throw(json_text, "train config"));
    try {
        t.validate();
    } catch (const std::exception& e) {
        throw HarnessConfigError(e.what());
    }
    return t;
}

oracle::ClassifierConfig parse_classifier_config(const std::string& json_text) {
    return parse_classifier(parse_or_throw(json_text, "classifier config"));
}

void ExperimentConfig::validate() const {
    if (!datagen::renderer_known(dataset.renderer))
        throw HarnessConfigError("unknown renderer '" + dataset.renderer + "'");
    if (variants.empty()) throw HarnessConfigError("no model variants listed");
    for (const auto& v : variants) {
        try {
            models::Variant::parse(v.name);
            v.train.validate();
        } catch (const std::exception& e) {
            throw HarnessConfigError("variant '" + v.name + "': " + e.what());
        }
    }
    if (seeds.empty()) throw HarnessConfigError("seeds list must be nonempty");
    if (rhos.empty()) throw HarnessConfigError("rho list must be nonempty");
    for (int r : rhos)
        if (r < 1) throw HarnessConfigError("rho values must be >= 1");
    if (metric_names.empty()) throw HarnessConfigError("metric list must be nonempty");
    for (const auto& m : metric_names)
        if (m != "irs" && m != "uc" && m != "cg" && m != "dci-d")
            throw HarnessConfigError("unknown metric '" + m + "'");
    try {
        metrics::parse_baseline(baseline);
    } catch (const std::exception& e) {
        throw HarnessConfigError(e.what());
    }
    if (output_dir.empty()) throw HarnessConfigError("output_dir is required");
}

std::string ExperimentConfig::canonical_json() const {
    json j;
    j["name"] = name;
    j["dataset"] = {{"name", dataset.name},
                    {"renderer", dataset.renderer},
                    {"graph", dataset.graph_path},
                    {"conditioning", dataset.conditioning_path},
                    {"max_records", dataset.max_records},
                    {"image_size", dataset.image_size},
                    {"seed", dataset.seed}};
    j["classifier"] = classifier_json(classifier);
    j["variants"] = json::array();
    for (const auto& v : variants)
        j["variants"].push_back(
            {{"name", v.name}, {"train", json::parse(v.train.canonical_json())}});
    j["rho"] = rhos;
    j["metrics"] = metric_names;
    j["seeds"] = seeds;
    j["baseline"] = baseline;
    j["output_dir"] = output_dir.string();
    return j.dump();
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw HarnessConfigError(std::string("invalid experiment JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    read_to(j, "name", cfg.name);
    if (!j.contains("dataset") || !j["dataset"].is_object())
        throw HarnessConfigError("missing 'dataset' object");
    const json& d = j["dataset"];
    read_to(d, "renderer", cfg.dataset.renderer);
    read_to(d, "name", cfg.dataset.name);
    if (cfg.dataset.name.empty()) cfg.dataset.name = cfg.dataset.renderer;
    read_to(d, "graph", cfg.dataset.graph_path);
    read_to(d, "conditioning", cfg.dataset.conditioning_path);
    read_to(d, "max_records", cfg.dataset.max_records);
    read_to(d, "image_size", cfg.dataset.image_size);
    read_to(d, "seed", cfg.dataset.seed);

    if (j.contains("classifier")) cfg.classifier = parse_classifier(j["classifier"]);

    if (!j.contains("variants") || !j["variants"].is_array())
        throw HarnessConfigError("missing 'variants' array");
    for (const json& v : j["variants"]) {
        VariantSpec spec;
        if (v.is_string()) {
            spec.name = v.get<std::string>();
        } else {
            read_to(v, "name", spec.name);
            if (v.contains("train")) spec.train = parse_train(v["train"]);
        }
        cfg.variants.push_back(std::move(spec));
    }

    read_to(j, "rho", cfg.rhos);
    read_to(j, "metrics", cfg.metric_names);
    read_to(j, "seeds", cfg.seeds);
    read_to(j, "baseline", cfg.baseline);
    std::string out;
    read_to(j, "output_dir", out);
    cfg.output_dir = out;
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw HarnessConfigError("cannot read experiment config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto cfg = from_json(text);
    // graph/conditioning paths are relative to the config file's directory
    const auto base = path.parent_path();
    auto rebase = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
    };
    rebase(cfg.dataset.graph_path);
    rebase(cfg.dataset.conditioning_path);
    return cfg;
}

}  // namespace cdb::harness
