#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cdb/common/hash.hpp"
#include "cdb/harness/experiment.hpp"

namespace cdb::harness {

namespace fs = std::filesystem;

std::filesystem::path cache_root(const ExperimentConfig& cfg) {
    if (const char* env = std::getenv(kCacheRootEnv); env && *env) return fs::path(env);
    return cfg.output_dir / "cache";
}

std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StageError("hash", "cannot read " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
    return h;
}

namespace {

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

}  // namespace

StageHandle ensure_stage(const fs::path& cache, const std::string& kind, std::uint64_t key,
                         const std::function<void(const fs::path&)>& build) {
    StageHandle h;
    h.id = kind + "/" + hex(key);
    h.dir = cache / kind / hex(key);
    // the marker is written last inside the published dir, so a dir without
    // it is a leftover from a crash mid-rename and gets rebuilt
    if (fs::exists(h.dir / ".stage-ok")) return h;

    fs::create_directories(cache / kind);
    const fs::path tmp = cache / kind / (".tmp-" + hex(key) + "-" +
                                         std::to_string(::getpid()));
    std::error_code ec;
    fs::remove_all(tmp, ec);
    fs::create_directories(tmp);
    try {
        build(tmp);
        std::ofstream(tmp / ".stage-ok") << h.id << "\n";
        fs::remove_all(h.dir, ec);  // stale partial dir from an older crash
        fs::rename(tmp, h.dir);
    } catch (const StageError&) {
        fs::remove_all(tmp, ec);
        throw;
    } catch (const std::exception& e) {
        fs::remove_all(tmp, ec);
        throw StageError(h.id, e.what());
    }
    h.rebuilt = true;
    return h;
}

}  // namespace cdb::harness
