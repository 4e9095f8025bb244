#include "cdb/metrics/latent_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cdb::metrics {

namespace {
constexpr char kMagic[8] = {'C', 'D', 'B', 'L', 'A', 'T', 'M', '1'};
}

void write_latent_matrix(const std::filesystem::path& path, const std::vector<double>& values,
                         std::size_t rows, std::size_t cols) {
    if (values.size() != rows * cols) throw LatentIoError("matrix shape mismatch");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw LatentIoError("cannot write latent matrix: " + path.string());
    nlohmann::json hdr{{"rows", rows},
                       {"cols", cols},
                       {"dtype", "float64"},
                       {"byte_order", "little-endian"},
                       {"layout", "row-major"}};
    const std::string h = hdr.dump();
    os.write(kMagic, 8);
    const auto len = static_cast<std::uint32_t>(h.size());
    os.write(reinterpret_cast<const char*>(&len), 4);
    os.write(h.data(), static_cast<std::streamsize>(h.size()));
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!os) throw LatentIoError("write failed: " + path.string());
}

std::pair<std::size_t, std::size_t> read_latent_matrix(const std::filesystem::path& path,
                                                       std::vector<double>& values) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw LatentIoError("cannot open latent matrix: " + path.string());
    char magic[8];
    is.read(magic, 8);
    if (std::string_view(magic, 8) != std::string_view(kMagic, 8))
        throw LatentIoError("bad latent matrix magic: " + path.string());
    std::uint32_t len = 0;
    is.read(reinterpret_cast<char*>(&len), 4);
    std::string h(len, '\0');
    is.read(h.data(), len);
    const auto hdr = nlohmann::json::parse(h);
    if (hdr.at("dtype") != "float64" || hdr.at("byte_order") != "little-endian" ||
        hdr.at("layout") != "row-major")
        throw LatentIoError("unsupported latent matrix encoding: " + path.string());
    const std::size_t rows = hdr.at("rows"), cols = hdr.at("cols");
    values.resize(rows * cols);
    is.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!is) throw LatentIoError("truncated latent matrix: " + path.string());
    return {rows, cols};
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void write_label_table(const std::filesystem::path& path,
                       const std::vector<std::string>& ids,
                       const std::vector<std::string>& factor_names,
                       const std::vector<std::vector<std::string>>& rows) {
    if (ids.size() != rows.size()) throw LatentIoError("id/row count mismatch");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw LatentIoError("cannot write label table: " + path.string());
    os << "id";
    for (const auto& f : factor_names) os << "," << csv_escape(f);
    os << "\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != factor_names.size())
            throw LatentIoError("label row width mismatch");
        os << csv_escape(ids[r]);
        for (const auto& v : rows[r]) os << "," << csv_escape(v);
        os << "\n";
    }
    if (!os) throw LatentIoError("write failed: " + path.string());
}

LabelTable read_label_table(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw LatentIoError("cannot open label table: " + path.string());
    LabelTable t;
    std::string line;
    if (!std::getline(is, line)) throw LatentIoError("empty label table: " + path.string());
    auto hdr = split_csv_line(line);
    if (hdr.empty() || hdr[0] != "id")
        throw LatentIoError("label table must start with an id column");
    t.factor_names.assign(hdr.begin() + 1, hdr.end());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != hdr.size())
            throw LatentIoError("ragged label table row: " + path.string());
        t.ids.push_back(cells[0]);
        t.rows.emplace_back(cells.begin() + 1, cells.end());
    }
    return t;
}

LatentData load_latent_data(const std::filesystem::path& matrix_path,
                            const std::filesystem::path& table_path,
                            const scm::CausalGraphSpec& graph) {
    LatentData data;
    auto [rows, cols] = read_latent_matrix(matrix_path, data.values);
    data.rows = rows;
    data.cols = cols;
    const auto table = read_label_table(table_path);
    if (table.ids.size() != rows)
        throw LatentIoError("label table row count does not match latent matrix");
    data.factor_names = table.factor_names;
    data.labels.resize(rows * table.factor_names.size());
    for (std::size_t f = 0; f < table.factor_names.size(); ++f) {
        const scm::FactorSpec* spec = nullptr;
        for (const auto& g : graph.factors)
            if (g.name == table.factor_names[f]) spec = &g;
        if (!spec) throw LatentIoError("graph lacks factor " + table.factor_names[f]);
        for (std::size_t r = 0; r < rows; ++r) {
            const auto vi = spec->value_index(table.rows[r][f]);
            if (!vi)
                throw LatentIoError("unknown value '" + table.rows[r][f] + "' for factor " +
                                    spec->name);
            data.labels[r * table.factor_names.size() + f] = static_cast<int>(*vi);
        }
    }
    return data;
}

}  // namespace cdb::metrics
