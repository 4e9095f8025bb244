#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "cdb/common/hash.hpp"
#include "cdb/datagen/image.hpp"
#include "cdb/harness/experiment.hpp"

namespace cdb::harness {

namespace fs = std::filesystem;

namespace {

std::string format_cell(const std::vector<double>& vals) {
    double mean = 0;
    for (double v : vals) mean += v / vals.size();
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << mean;
    if (vals.size() > 1) {
        double var = 0;
        for (double v : vals) var += (v - mean) * (v - mean) / vals.size();
        os << " ± " << std::fixed << std::setprecision(3) << std::sqrt(var);
    }
    return os.str();
}

void draw_line(datagen::Image& img, int x0, int y0, int x1, int y1, const std::uint8_t rgb[3]) {
    const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
    for (int s = 0; s <= steps; ++s) {
        const int x = x0 + (x1 - x0) * s / steps;
        const int y = y0 + (y1 - y0) * s / steps;
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
        std::uint8_t* p = img.pixel(x, y);
        p[0] = rgb[0];
        p[1] = rgb[1];
        p[2] = rgb[2];
    }
}

}  // namespace

namespace {

// display columns, not bytes: the ± in spread cells is two UTF-8 bytes wide
std::size_t display_width(const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
}

}  // namespace

std::string ResultTable::render() const {
    std::vector<std::size_t> widths;
    std::size_t head = 7;  // "variant"
    for (const auto& r : row_labels) head = std::max(head, display_width(r));
    widths.push_back(head);
    for (std::size_t c = 0; c < column_labels.size(); ++c) {
        std::size_t w = display_width(column_labels[c]);
        for (const auto& row : cells) w = std::max(w, display_width(row[c]));
        widths.push_back(w);
    }
    std::ostringstream os;
    auto pad = [&](const std::string& s, std::size_t w) {
        os << s << std::string(w - display_width(s), ' ');
    };
    pad("variant", widths[0]);
    for (std::size_t c = 0; c < column_labels.size(); ++c) {
        os << "  ";
        pad(column_labels[c], widths[c + 1]);
    }
    os << "\n";
    for (std::size_t w : widths) os << std::string(w, '-') << "--";
    os << "\n";
    for (std::size_t r = 0; r < row_labels.size(); ++r) {
        pad(row_labels[r], widths[0]);
        for (std::size_t c = 0; c < column_labels.size(); ++c) {
            os << "  ";
            pad(cells[r][c], widths[c + 1]);
        }
        os << "\n";
    }
    return os.str();
}

ResultTable emit_table(const std::vector<metrics::MetricReport>& reports,
                       const fs::path& out_dir) {
    if (reports.empty())
        throw HarnessConfigError("cannot build a result table from zero reports");
    for (const auto& r : reports)
        if (r.provenance.dataset != reports.front().provenance.dataset)
            throw HarnessConfigError("reports mix datasets: '" + r.provenance.dataset +
                                     "' vs '" + reports.front().provenance.dataset + "'");

    ResultTable table;
    std::set<int> rho_set;
    for (const auto& r : reports) {
        if (!std::count(table.row_labels.begin(), table.row_labels.end(),
                        r.provenance.variant))
            table.row_labels.push_back(r.provenance.variant);
        for (const auto& [rho, _] : r.uc) rho_set.insert(rho);
        for (const auto& [rho, _] : r.cg) rho_set.insert(rho);
        table.report_hashes.push_back(fnv1a64(r.to_json()));
    }
    table.column_labels = {"IRS", "DCI-D"};
    for (int rho : rho_set) table.column_labels.push_back("UC@rho=" + std::to_string(rho));
    for (int rho : rho_set) table.column_labels.push_back("CG@rho=" + std::to_string(rho));

    for (const auto& variant : table.row_labels) {
        std::vector<double> irs, dci;
        std::map<int, std::vector<double>> uc, cg;
        for (const auto& r : reports) {
            if (r.provenance.variant != variant) continue;
            irs.push_back(r.irs);
            dci.push_back(r.dci_d);
            for (const auto& [rho, v] : r.uc) uc[rho].push_back(v);
            for (const auto& [rho, v] : r.cg) cg[rho].push_back(v);
        }
        std::vector<std::string> row{format_cell(irs), format_cell(dci)};
        for (int rho : rho_set)
            row.push_back(uc.count(rho) ? format_cell(uc[rho]) : std::string("-"));
        for (int rho : rho_set)
            row.push_back(cg.count(rho) ? format_cell(cg[rho]) : std::string("-"));
        table.cells.push_back(std::move(row));
    }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream(out_dir / "table.txt") << table.render();
        std::vector<PlotSeries> series;
        for (const auto& variant : table.row_labels) {
            PlotSeries uc_s{variant + " UC", {}, {}}, cg_s{variant + " CG", {}, {}};
            for (int rho : rho_set) {
                std::vector<double> ucv, cgv;
                for (const auto& r : reports) {
                    if (r.provenance.variant != variant) continue;
                    if (r.uc.count(rho)) ucv.push_back(r.uc.at(rho));
                    if (r.cg.count(rho)) cgv.push_back(r.cg.at(rho));
                }
                auto mean = [](const std::vector<double>& v) {
                    double s = 0;
                    for (double x : v) s += x / v.size();
                    return s;
                };
                if (!ucv.empty()) {
                    uc_s.x.push_back(rho);
                    uc_s.y.push_back(mean(ucv));
                }
                if (!cgv.empty()) {
                    cg_s.x.push_back(rho);
                    cg_s.y.push_back(mean(cgv));
                }
            }
            if (!uc_s.x.empty()) series.push_back(std::move(uc_s));
            if (!cg_s.x.empty()) series.push_back(std::move(cg_s));
        }
        if (!series.empty())
            write_line_plot(out_dir / "score_vs_rho.png", "score vs rho", series);
    }
    return table;
}

void write_line_plot(const fs::path& path, const std::string& title,
                     const std::vector<PlotSeries>& series) {
    (void)title;  // no glyph rendering; the filename carries the identity
    const int W = 480, H = 360, M = 40;
    auto img = datagen::Image::filled(W, H, 255, 255, 255);
    const std::uint8_t axis[3] = {0, 0, 0};
    draw_line(img, M, H - M, W - M / 2, H - M, axis);
    draw_line(img, M, H - M, M, M / 2, axis);

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;

    static const std::uint8_t palette[][3] = {{200, 40, 40},  {40, 120, 200}, {40, 160, 60},
                                              {180, 120, 20}, {140, 60, 180}, {20, 150, 150}};
    auto px = [&](double x) {
        return M + static_cast<int>((x - xmin) / (xmax - xmin) * (W - M - M / 2 - M));
    };
    auto py = [&](double y) {
        return H - M - static_cast<int>((y - ymin) / (ymax - ymin) * (H - M - M / 2 - M));
    };
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto* rgb = palette[si % 6];
        const auto& s = series[si];
        for (std::size_t i = 0; i + 1 < s.x.size(); ++i)
            draw_line(img, px(s.x[i]), py(s.y[i]), px(s.x[i + 1]), py(s.y[i + 1]), rgb);
        for (std::size_t i = 0; i < s.x.size(); ++i)  // small point markers
            for (int dx = -2; dx <= 2; ++dx)
                draw_line(img, px(s.x[i]) + dx, py(s.y[i]) - 2, px(s.x[i]) + dx,
                          py(s.y[i]) + 2, rgb);
    }
    fs::create_directories(path.parent_path());
    datagen::write_png(img, path);
}

void plot_score_vs_epoch(const fs::path& path, const std::vector<PlotSeries>& series) {
    write_line_plot(path, "score vs epoch", series);
}

}  // namespace cdb::harness
