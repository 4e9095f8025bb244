#include "cdb/models/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace cdb::models {

namespace {

constexpr char kMagic[8] = {'C', 'D', 'B', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); }
void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<char*>(&v), 8); }
void write_str(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void write_floats(std::ostream& os, const std::vector<float>& v) {
    write_u64(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(float)));
}

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
std::string read_str(std::istream& is) {
    std::string s(read_u32(is), '\0');
    is.read(s.data(), static_cast<std::streamsize>(s.size()));
    return s;
}
std::vector<float> read_floats(std::istream& is) {
    std::vector<float> v(read_u64(is));
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(float)));
    return v;
}

void write_moments(std::ostream& os, cdb::nn::Adam* opt) {
    if (!opt) {
        write_u32(os, 0);
        return;
    }
    write_u32(os, 1);
    write_u64(os, static_cast<std::uint64_t>(opt->step_count()));
    write_u32(os, static_cast<std::uint32_t>(opt->moment1().size()));
    for (auto& m : opt->moment1()) write_floats(os, m);
    for (auto& v : opt->moment2()) write_floats(os, v);
}

void read_moments(std::istream& is, long& step, std::vector<std::vector<float>>& m1,
                  std::vector<std::vector<float>>& m2) {
    if (read_u32(is) == 0) return;
    step = static_cast<long>(read_u64(is));
    const std::uint32_t n = read_u32(is);
    m1.resize(n);
    m2.resize(n);
    for (auto& m : m1) m = read_floats(is);
    for (auto& v : m2) v = read_floats(is);
}

}  // namespace

void save_checkpoint(const std::string& path, ModelHandle& handle, cdb::nn::Adam* vae_opt,
                     cdb::nn::Adam* disc_opt) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw CheckpointError("cannot open checkpoint for writing: " + path);
        os.write(kMagic, sizeof(kMagic));
        write_u32(os, kVersion);
        write_str(os, handle.variant.to_string());
        write_str(os, handle.cfg.canonical_json());
        write_u64(os, handle.cfg.hash());
        write_u64(os, handle.cfg.seed);
        write_u32(os, static_cast<std::uint32_t>(handle.image_size));
        write_u32(os, static_cast<std::uint32_t>(handle.channels));
        write_u32(os, static_cast<std::uint32_t>(handle.epochs_done));
        write_u32(os, static_cast<std::uint32_t>(handle.cardinalities.size()));
        for (int c : handle.cardinalities) write_u32(os, static_cast<std::uint32_t>(c));
        auto params = handle.vae_params();
        std::vector<cdb::nn::ParamBlock*> all(params);
        if (handle.disc)
            for (auto* p : handle.disc->params()) all.push_back(p);
        write_u32(os, static_cast<std::uint32_t>(all.size()));
        for (auto* p : all) write_floats(os, p->w);
        write_moments(os, vae_opt);
        write_moments(os, disc_opt);
        if (!os) throw CheckpointError("write failed: " + path);
    }
    fs::rename(tmp, target);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw CheckpointError("bad checkpoint magic: " + path);
    if (read_u32(is) != kVersion) throw CheckpointError("unsupported checkpoint version");

    const std::string variant_name = read_str(is);
    const std::string cfg_json = read_str(is);
    const std::uint64_t stored_hash = read_u64(is);
    const std::uint64_t seed = read_u64(is);
    const int image_size = static_cast<int>(read_u32(is));
    const int channels = static_cast<int>(read_u32(is));
    const int epochs_done = static_cast<int>(read_u32(is));
    std::vector<int> cards(read_u32(is));
    for (auto& c : cards) c = static_cast<int>(read_u32(is));

    TrainConfig cfg;
    {
        auto j = nlohmann::json::parse(cfg_json);
        cfg.batch_size = j.at("batch_size");
        cfg.latent_dim = j.at("latent_dim");
        cfg.beta = j.at("beta");
        cfg.gamma = j.at("gamma");
        cfg.lambda_d = j.at("lambda_d");
        cfg.lambda_od = j.at("lambda_od");
        cfg.supervised_weight = j.at("supervised_weight");
        cfg.supervision_fraction = j.at("supervision_fraction");
        cfg.lambda_bb = j.at("lambda_bb");
        cfg.epochs = j.at("epochs");
        cfg.lr = j.at("lr");
        cfg.disc_lr = j.at("disc_lr");
        cfg.base_channels = j.at("base_channels");
        cfg.hidden_dim = j.at("hidden_dim");
        cfg.seed = j.at("seed");
    }
    if (cfg.hash() != stored_hash) throw CheckpointError("config hash mismatch: " + path);
    if (cfg.seed != seed) throw CheckpointError("seed mismatch in checkpoint header");

    LoadedCheckpoint out{make_model(Variant::parse(variant_name), cfg, image_size, channels,
                                    cards)};
    out.handle.epochs_done = epochs_done;

    auto params = out.handle.vae_params();
    std::vector<cdb::nn::ParamBlock*> all(params);
    if (out.handle.disc)
        for (auto* p : out.handle.disc->params()) all.push_back(p);
    const std::uint32_t n = read_u32(is);
    if (n != all.size()) throw CheckpointError("parameter block count mismatch: " + path);
    for (auto* p : all) {
        auto w = read_floats(is);
        if (w.size() != p->w.size())
            throw CheckpointError("parameter block size mismatch: " + path);
        p->w = std::move(w);
    }
    read_moments(is, out.vae_opt_step, out.vae_m1, out.vae_m2);
    read_moments(is, out.disc_opt_step, out.disc_m1, out.disc_m2);
    if (!is) throw CheckpointError("truncated checkpoint: " + path);
    return out;
}

}  // namespace cdb::models
