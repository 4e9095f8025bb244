#include "cdb/datagen/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cdb/datagen/image.hpp"
#include "cdb/scm/config.hpp"

namespace cdb::datagen {

using nlohmann::json;

namespace {

std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

json bounds_to_json(const Bounds& b) {
    return json::array({json::array({b.x0, b.y0}), json::array({b.x1, b.y1})});
}

Bounds bounds_from_json(const json& j) {
    return {j.at(0).at(0).get<int>(), j.at(0).at(1).get<int>(), j.at(1).at(0).get<int>(),
            j.at(1).at(1).get<int>()};
}

json size_value(const std::string& symbolic) {
    // Numeric sizes in metadata follow the dataset convention:
    // small(1.5), medium(2), large(2.5).
    if (symbolic == "small") return 1.5;
    if (symbolic == "medium") return 2;
    if (symbolic == "large") return 2.5;
    throw scm::SchemaError("unknown size value '" + symbolic + "'");
}

std::string size_symbol(const json& v) {
    const double d = v.get<double>();
    if (d == 1.5) return "small";
    if (d == 2.0) return "medium";
    if (d == 2.5) return "large";
    throw scm::SchemaError("unknown numeric size in metadata");
}

}  // namespace

std::string metadata_to_json(const std::string& renderer, const scm::FactorAssignment& a,
                             const Bounds& b) {
    json obj = json::object();
    json top = json::object();
    if (renderer == "candle-lite") {
        top["scene"] = a.at("scene");
        top["lights"] = a.at("light");
        obj["object_type"] = a.at("object");
        obj["color"] = a.at("color");
        obj["size"] = size_value(a.at("size"));
        obj["rotation"] = std::stoi(a.at("angle"));
        obj["bounds"] = bounds_to_json(b);
        top["objects"] = {{capitalize(a.at("object")) + "_0", obj}};
    } else if (renderer == "toy") {
        top["scene"] = "toy";
        top["lights"] = "middle";
        obj["object_type"] = a.at("shape");
        obj["color"] = a.at("color");
        obj["bounds"] = bounds_to_json(b);
        top["objects"] = {{capitalize(a.at("shape")) + "_0", obj}};
    } else if (renderer == "grid") {
        top["scene"] = "grid";
        top["lights"] = "middle";
        obj["object_type"] = a.at("shape");
        obj["size"] = a.at("size");
        obj["rotation"] = std::stoi(a.at("orientation"));
        obj["pos_x"] = a.at("pos_x");
        obj["pos_y"] = a.at("pos_y");
        obj["bounds"] = bounds_to_json(b);
        top["objects"] = {{capitalize(a.at("shape")) + "_0", obj}};
    } else {
        throw scm::SchemaError("unknown renderer '" + renderer + "'");
    }
    return top.dump(2);
}

std::pair<scm::FactorAssignment, Bounds> parse_metadata(const std::string& renderer,
                                                        const std::string& json_text) {
    const json top = json::parse(json_text);
    const json& objects = top.at("objects");
    if (objects.size() != 1) throw scm::SchemaError("metadata must contain exactly one object");
    const json& obj = objects.begin().value();
    scm::FactorAssignment a;
    if (renderer == "candle-lite") {
        a.values["scene"] = top.at("scene").get<std::string>();
        a.values["light"] = top.at("lights").get<std::string>();
        a.values["object"] = obj.at("object_type").get<std::string>();
        a.values["color"] = obj.at("color").get<std::string>();
        a.values["size"] = size_symbol(obj.at("size"));
        a.values["angle"] = std::to_string(obj.at("rotation").get<int>());
    } else if (renderer == "toy") {
        a.values["shape"] = obj.at("object_type").get<std::string>();
        a.values["color"] = obj.at("color").get<std::string>();
    } else if (renderer == "grid") {
        a.values["shape"] = obj.at("object_type").get<std::string>();
        a.values["size"] = obj.at("size").get<std::string>();
        a.values["orientation"] = std::to_string(obj.at("rotation").get<int>());
        a.values["pos_x"] = obj.at("pos_x").get<std::string>();
        a.values["pos_y"] = obj.at("pos_y").get<std::string>();
    } else {
        throw scm::SchemaError("unknown renderer '" + renderer + "'");
    }
    return {a, bounds_from_json(obj.at("bounds"))};
}

namespace {

json assignment_to_json(const scm::FactorAssignment& a) {
    json j = json::object();
    for (const auto& [k, v] : a.values) j[k] = v;
    j["_seed"] = a.seed;
    return j;
}

scm::FactorAssignment assignment_from_json(const json& j) {
    scm::FactorAssignment a;
    for (const auto& [k, v] : j.items()) {
        if (k == "_seed")
            a.seed = v.get<std::uint64_t>();
        else
            a.values[k] = v.get<std::string>();
    }
    return a;
}

}  // namespace

void save_manifest(const DatasetManifest& m) {
    json j;
    j["renderer"] = m.renderer;
    j["seed"] = m.seed;
    j["width"] = m.width;
    j["height"] = m.height;
    j["graph"] = json::parse(scm::graph_to_json(m.graph));
    j["records"] = json::array();
    for (const auto& e : m.records)
        j["records"].push_back({{"id", e.id},
                                {"image", e.image_path},
                                {"metadata", e.metadata_path},
                                {"assignment", assignment_to_json(e.assignment)},
                                {"bounds", bounds_to_json(e.bounds)}});
    const auto path = m.root / "manifest.json";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    out << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest " + manifest_path.string());
    json j;
    in >> j;
    DatasetManifest m;
    m.renderer = j.at("renderer").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    m.graph = scm::parse_graph_json(j.at("graph").dump());
    for (const auto& je : j.at("records")) {
        ManifestEntry e;
        e.id = je.at("id").get<std::string>();
        e.image_path = je.at("image").get<std::string>();
        e.metadata_path = je.at("metadata").get<std::string>();
        e.assignment = assignment_from_json(je.at("assignment"));
        e.bounds = bounds_from_json(je.at("bounds"));
        m.records.push_back(std::move(e));
    }
    m.root = manifest_path.parent_path();
    return m;
}

DatasetManifest generate_dataset(const scm::CausalGraphSpec& graph, const std::string& renderer,
                                 const std::filesystem::path& out_dir, std::uint64_t seed,
                                 const GenerateOptions& opts) {
    if (!renderer_known(renderer)) throw scm::SchemaError("unknown renderer '" + renderer + "'");
    const auto assignments = enumerate_valid_assignments(graph);
    if (assignments.empty())
        throw scm::UnsatisfiableGraphError("graph admits no valid assignment");

    const int variants = nuisance_variants(renderer);
    std::vector<std::pair<std::size_t, int>> plan;  // (assignment index, variant)
    plan.reserve(assignments.size() * variants);
    for (std::size_t ai = 0; ai < assignments.size(); ++ai)
        for (int v = 0; v < variants; ++v) plan.emplace_back(ai, v);

    if (opts.max_records > 0 && plan.size() > opts.max_records) {
        std::vector<std::size_t> idx(plan.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::uint64_t rng = seed ^ 0x5eedULL;
        for (std::size_t i = idx.size() - 1; i > 0; --i)
            std::swap(idx[i], idx[scm::next_below(rng, i + 1)]);
        idx.resize(opts.max_records);
        std::sort(idx.begin(), idx.end());
        std::vector<std::pair<std::size_t, int>> kept;
        kept.reserve(idx.size());
        for (const auto i : idx) kept.push_back(plan[i]);
        plan = std::move(kept);
    }

    std::filesystem::create_directories(out_dir);
    DatasetManifest m;
    m.renderer = renderer;
    m.graph = graph;
    m.seed = seed;
    m.root = out_dir;

    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto [ai, variant] = plan[i];
        scm::FactorAssignment a = assignments[ai];
        if (renderer == "toy")
            a.seed = static_cast<std::uint64_t>(variant);
        else {
            std::uint64_t s = seed;
            a.seed = scm::next_random(s) ^ (ai * 0x9e3779b97f4a7c15ULL + variant);
        }
        ManifestEntry e;
        e.id = renderer + "_" + std::to_string(i);
        e.image_path = e.id + ".png";
        e.metadata_path = e.id + ".json";
        try {
            ImageRecord rec = render(renderer, a, opts.render);
            m.width = rec.pixels.width;
            m.height = rec.pixels.height;
            e.assignment = rec.assignment;
            e.bounds = rec.bounds;
            if (opts.write_images) {
                write_png(rec.pixels, out_dir / e.image_path);
                std::ofstream meta(out_dir / e.metadata_path);
                if (!meta) throw std::runtime_error("cannot write metadata");
                meta << metadata_to_json(renderer, rec.assignment, rec.bounds) << "\n";
            }
        } catch (const std::exception& err) {
            throw std::runtime_error("record " + e.id + ": " + err.what());
        }
        m.records.push_back(std::move(e));
    }
    save_manifest(m);
    return m;
}

namespace {

bool conjunction_matches(const scm::ConstraintRule& rule, const scm::FactorAssignment& a) {
    for (const auto& pred : rule.predicates) {
        const auto it = a.values.find(pred.factor);
        if (it == a.values.end())
            throw scm::SchemaError("conditioning references unknown factor '" + pred.factor +
                                   "'");
        if (std::find(pred.values.begin(), pred.values.end(), it->second) == pred.values.end())
            return false;
    }
    return true;
}

}  // namespace

DatasetManifest apply_confounded_filter(const DatasetManifest& manifest,
                                        const std::vector<scm::ConstraintRule>& conditioning) {
    for (const auto& rule : conditioning)
        for (const auto& pred : rule.predicates) {
            const scm::FactorSpec* f = manifest.graph.find_factor(pred.factor);
            if (!f)
                throw scm::SchemaError("conditioning references unknown factor '" + pred.factor +
                                       "'");
            for (const auto& v : pred.values)
                if (!f->value_index(v))
                    throw scm::SchemaError("conditioning references unknown value '" + v + "'");
        }
    DatasetManifest out = manifest;
    out.records.clear();
    for (const auto& e : manifest.records) {
        bool keep = conditioning.empty();
        for (const auto& rule : conditioning)
            if (conjunction_matches(rule, e.assignment)) {
                keep = true;
                break;
            }
        if (keep) out.records.push_back(e);
    }
    if (out.records.empty())
        throw EmptyFilterError("conditioning eliminates every record");
    return out;
}

std::vector<scm::ConstraintRule> load_conditioning(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open conditioning config " + path.string());
    json j;
    in >> j;
    std::vector<scm::ConstraintRule> rules;
    for (const auto& jr : j.at("keep")) {
        scm::ConstraintRule r;
        for (const auto& [factor, vals] : jr.at("match").items())
            r.predicates.push_back({factor, vals.get<std::vector<std::string>>()});
        r.reason = jr.value("reason", "");
        rules.push_back(std::move(r));
    }
    return rules;
}

std::vector<RecordPair> query_pairs(const DatasetManifest& manifest, const PairingQuery& q,
                                    std::size_t k, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("query_pairs: k must be >= 1");
    const scm::FactorSpec* rank_spec = nullptr;
    if (q.mode == PairingQuery::Mode::rank) {
        rank_spec = manifest.graph.find_factor(q.rank_factor);
        if (!rank_spec)
            throw scm::SchemaError("rank factor '" + q.rank_factor + "' not in graph");
    }
    for (const auto& f : q.factors)
        if (!manifest.graph.find_factor(f))
            throw scm::SchemaError("pairing factor '" + f + "' not in graph");

    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        std::string key;
        for (const auto& f : q.factors) key += manifest.records[i].assignment.at(f) + "\x1f";
        groups[key].push_back(i);
    }
    std::vector<const std::vector<std::size_t>*> eligible;
    std::size_t total = 0;
    for (const auto& [key, members] : groups)
        if (members.size() >= 2) {
            eligible.push_back(&members);
            total += members.size();
        }
    if (eligible.empty()) return {};

    std::uint64_t rng = seed ^ 0x9a1ee7ULL;
    std::vector<RecordPair> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        // group chosen proportionally to its member count
        std::uint64_t pick = scm::next_below(rng, total);
        const std::vector<std::size_t>* grp = nullptr;
        for (const auto* g : eligible) {
            if (pick < g->size()) {
                grp = g;
                break;
            }
            pick -= g->size();
        }
        const std::size_t a = (*grp)[scm::next_below(rng, grp->size())];
        std::size_t b = a;
        while (b == a) b = (*grp)[scm::next_below(rng, grp->size())];
        RecordPair p{a, b, 0};
        if (rank_spec) {
            const auto ia = rank_spec->value_index(manifest.records[a].assignment.at(q.rank_factor));
            const auto ib = rank_spec->value_index(manifest.records[b].assignment.at(q.rank_factor));
            p.order = (*ia > *ib) ? 1 : (*ia < *ib ? -1 : 0);
        }
        out.push_back(p);
    }
    return out;
}

}  // namespace cdb::datagen
