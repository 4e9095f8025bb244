#include "cdb/datagen/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace cdb::datagen {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Rgb {
    double r, g, b;
};

Rgb factor_color(const std::string& name) {
    if (name == "red") return {0.86, 0.16, 0.16};
    if (name == "green") return {0.16, 0.78, 0.24};
    if (name == "blue") return {0.16, 0.31, 0.86};
    if (name == "yellow") return {0.90, 0.86, 0.20};
    if (name == "purple") return {0.59, 0.24, 0.78};
    if (name == "orange") return {0.94, 0.55, 0.16};
    if (name == "white") return {0.95, 0.95, 0.95};
    throw scm::SchemaError("no color table entry for '" + name + "'");
}

// Point-in-shape tests in object space: |u|,|v| <= 1, v pointing up.
bool inside_shape(const std::string& shape, double u, double v) {
    if (shape == "sphere" || shape == "circle") return u * u + v * v <= 1.0;
    if (shape == "cube" || shape == "square")
        return std::max(std::abs(u), std::abs(v)) <= 0.82;
    if (shape == "cylinder") return std::abs(u) <= 0.58 && std::abs(v) <= 0.95;
    if (shape == "cone") {
        if (v < -0.95 || v > 0.95) return false;
        return std::abs(u) <= 0.85 * (0.95 - v) / 1.9;
    }
    if (shape == "torus") {
        const double rr = u * u + v * v;
        return rr <= 1.0 && rr >= 0.45 * 0.45;
    }
    if (shape == "ellipse") return u * u + (v / 0.58) * (v / 0.58) <= 1.0;
    if (shape == "heart") {
        const double x = u * 1.25;
        const double y = v * 1.25 + 0.25;
        const double q = x * x + y * y - 1.0;
        return q * q * q - x * x * y * y * y <= 0.0;
    }
    throw scm::SchemaError("no silhouette for shape '" + shape + "'");
}

// 2x2 supersampled coverage of a rotated, scaled silhouette.
double coverage(const std::string& shape, double px, double py, double cx, double cy,
                double radius, double angle_rad) {
    const double c = std::cos(angle_rad), s = std::sin(angle_rad);
    int hits = 0;
    for (int sy = 0; sy < 2; ++sy) {
        for (int sx = 0; sx < 2; ++sx) {
            const double x = px + 0.25 + 0.5 * sx - cx;
            const double y = cy - (py + 0.25 + 0.5 * sy);  // v up
            const double u = (c * x + s * y) / radius;
            const double v = (-s * x + c * y) / radius;
            if (inside_shape(shape, u, v)) ++hits;
        }
    }
    return hits / 4.0;
}

struct DrawResult {
    Bounds bounds;
    int foreground_pixels = 0;
};

// Draws the silhouette onto img; a pixel is foreground iff coverage >= 0.5,
// and only foreground pixels are modified (bounds tightness depends on it).
DrawResult draw_shape(Image& img, const std::string& shape, const Rgb& color, double cx,
                      double cy, double radius, double angle_rad, double shade = 1.0) {
    const int x_lo = std::max(0, static_cast<int>(std::floor(cx - radius - 2)));
    const int x_hi = std::min(img.width - 1, static_cast<int>(std::ceil(cx + radius + 2)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(cy - radius - 2)));
    const int y_hi = std::min(img.height - 1, static_cast<int>(std::ceil(cy + radius + 2)));
    int cmin = img.width, cmax = -1, rmin = img.height, rmax = -1, count = 0;
    const double c = std::cos(angle_rad), s = std::sin(angle_rad);
    for (int y = y_lo; y <= y_hi; ++y) {
        for (int x = x_lo; x <= x_hi; ++x) {
            const double cov = coverage(shape, x, y, cx, cy, radius, angle_rad);
            if (cov < 0.5) continue;
            // Shading gradient along the object's own "up" axis. Rotating the
            // gradient with the silhouette keeps the orientation visible even
            // for rotation-symmetric shapes (sphere, torus, square).
            const double xo = x + 0.5 - cx, yo = cy - (y + 0.5);
            const double v = (-s * xo + c * yo) / radius;
            const double row_shade =
                shade * (0.70 + 0.30 * std::clamp((v + 1.0) / 2.0, 0.0, 1.0));
            std::uint8_t* p = img.pixel(x, y);
            p[0] = static_cast<std::uint8_t>(std::clamp(color.r * row_shade, 0.0, 1.0) * 255.0);
            p[1] = static_cast<std::uint8_t>(std::clamp(color.g * row_shade, 0.0, 1.0) * 255.0);
            p[2] = static_cast<std::uint8_t>(std::clamp(color.b * row_shade, 0.0, 1.0) * 255.0);
            cmin = std::min(cmin, x);
            cmax = std::max(cmax, x);
            rmin = std::min(rmin, y);
            rmax = std::max(rmax, y);
            ++count;
        }
    }
    if (count == 0)
        throw ConstraintError("object rendered with zero foreground pixels (shape '" + shape +
                              "', radius " + std::to_string(radius) + ")");
    DrawResult res;
    res.foreground_pixels = count;
    // convert row extent (top-down) to bottom-left-origin bounds, half-open upper edges
    res.bounds = {cmin, img.height - 1 - rmax, cmax + 1, img.height - rmin};
    return res;
}

void darken_ellipse(Image& img, double cx, double cy, double rx, double ry, double factor) {
    const int x_lo = std::max(0, static_cast<int>(cx - rx - 1));
    const int x_hi = std::min(img.width - 1, static_cast<int>(cx + rx + 1));
    const int y_lo = std::max(0, static_cast<int>(cy - ry - 1));
    const int y_hi = std::min(img.height - 1, static_cast<int>(cy + ry + 1));
    for (int y = y_lo; y <= y_hi; ++y) {
        for (int x = x_lo; x <= x_hi; ++x) {
            const double u = (x - cx) / rx, v = (y - cy) / ry;
            if (u * u + v * v > 1.0) continue;
            std::uint8_t* p = img.pixel(x, y);
            for (int ch = 0; ch < 3; ++ch)
                p[ch] = static_cast<std::uint8_t>(p[ch] * factor);
        }
    }
}

std::size_t factor_index(const scm::CausalGraphSpec& g, const scm::FactorAssignment& a,
                         const std::string& factor) {
    const scm::FactorSpec* f = g.find_factor(factor);
    const auto idx = f->value_index(a.at(factor));
    if (!idx) throw scm::SchemaError("unknown value for factor '" + factor + "'");
    return *idx;
}

}  // namespace

// --- Toy -------------------------------------------------------------------

scm::CausalGraphSpec toy_graph() {
    scm::CausalGraphSpec g;
    g.factors = {
        {"shape", {"cylinder", "cone", "cube"}},
        {"color", {"red", "green", "blue"}},
    };
    // Full observed confounding: each shape exists in exactly one color.
    g.observed_rules = {
        {{{"shape", {"cylinder"}}, {"color", {"green", "blue"}}}, "cylinders are red only"},
        {{{"shape", {"cone"}}, {"color", {"red", "blue"}}}, "cones are green only"},
        {{{"shape", {"cube"}}, {"color", {"red", "green"}}}, "cubes are blue only"},
    };
    g.nuisance = {
        {"position", "object position on a 6x6 jitter grid"},
        {"size", "object radius, 4 steps"},
    };
    return g;
}

ImageRecord render_toy(const scm::FactorAssignment& assignment) {
    const auto graph = toy_graph();
    if (!check_constraints(assignment, graph))
        throw ConstraintError("toy assignment violates confounding rules");
    ImageRecord rec;
    rec.assignment = assignment;
    rec.pixels = Image::filled(kToyImageSize, kToyImageSize, 26, 26, 30);

    // Nuisance from the record seed: 6x6 position grid * 4 sizes = 144 variants.
    const std::uint64_t variant = assignment.seed % kToyNuisanceVariants;
    const int vx = static_cast<int>(variant % 6);
    const int vy = static_cast<int>((variant / 6) % 6);
    const int vs = static_cast<int>(variant / 36);
    // Nuisance stays visually subtle (sub-pixel to ~1px effects): the toy set
    // exists to study the shape/color confound, not position/size modelling.
    const double cx = kToyImageSize / 2.0 + 0.13 + 0.25 * (vx - 2.5);
    const double cy = kToyImageSize / 2.0 + 0.13 + 0.25 * (vy - 2.5);
    const double radius = 21.05 + 0.125 * vs;

    const auto res = draw_shape(rec.pixels, assignment.at("shape"),
                                factor_color(assignment.at("color")), cx, cy, radius, 0.0);
    rec.bounds = res.bounds;
    return rec;
}

// --- CANDLE-lite -----------------------------------------------------------

namespace {

struct ScenePalette {
    const char* name;
    Rgb sky_top, sky_bottom, ground;
};

constexpr int kNumScenes = 16;

const std::array<ScenePalette, kNumScenes>& scene_palettes() {
    static const std::array<ScenePalette, kNumScenes> p = {{
        {"indoor", {0.42, 0.38, 0.34}, {0.55, 0.50, 0.44}, {0.38, 0.30, 0.24}},
        {"playground", {0.45, 0.72, 0.92}, {0.72, 0.86, 0.95}, {0.78, 0.62, 0.40}},
        {"outdoor", {0.32, 0.62, 0.90}, {0.66, 0.82, 0.94}, {0.36, 0.58, 0.30}},
        {"bridge", {0.80, 0.58, 0.38}, {0.90, 0.74, 0.52}, {0.46, 0.42, 0.40}},
        {"city_square", {0.76, 0.66, 0.52}, {0.88, 0.80, 0.64}, {0.58, 0.56, 0.54}},
        {"hall", {0.50, 0.46, 0.52}, {0.64, 0.60, 0.66}, {0.52, 0.44, 0.38}},
        {"grassland", {0.46, 0.70, 0.88}, {0.74, 0.86, 0.92}, {0.28, 0.60, 0.26}},
        {"garage", {0.36, 0.36, 0.38}, {0.48, 0.48, 0.50}, {0.34, 0.34, 0.36}},
        {"street", {0.56, 0.62, 0.70}, {0.74, 0.78, 0.82}, {0.30, 0.30, 0.32}},
        {"beach", {0.36, 0.66, 0.90}, {0.78, 0.88, 0.94}, {0.88, 0.80, 0.58}},
        {"station", {0.62, 0.56, 0.46}, {0.78, 0.72, 0.60}, {0.50, 0.48, 0.46}},
        {"tunnel", {0.22, 0.20, 0.22}, {0.34, 0.32, 0.34}, {0.26, 0.24, 0.26}},
        {"moonlit_grass", {0.10, 0.14, 0.28}, {0.20, 0.26, 0.42}, {0.12, 0.24, 0.18}},
        {"dusk_city", {0.48, 0.30, 0.40}, {0.84, 0.54, 0.38}, {0.28, 0.22, 0.28}},
        {"skywalk", {0.52, 0.72, 0.92}, {0.78, 0.88, 0.96}, {0.66, 0.68, 0.72}},
        {"garden", {0.44, 0.70, 0.86}, {0.72, 0.84, 0.90}, {0.34, 0.56, 0.28}},
    }};
    return p;
}

}  // namespace

scm::CausalGraphSpec candle_lite_graph() {
    scm::CausalGraphSpec g;
    std::vector<std::string> scenes;
    for (const auto& s : scene_palettes()) scenes.emplace_back(s.name);
    g.factors = {
        {"light", {"left", "middle", "right"}},
        {"scene", scenes},
        {"object", {"cube", "sphere", "cylinder", "cone", "torus"}},
        {"size", {"small", "medium", "large"}},
        {"color", {"red", "blue", "yellow", "purple", "orange"}},
        {"angle", {"0", "15", "30", "45", "60", "90"}},
    };
    g.observed_rules = {
        {{{"object", {"cube", "sphere", "cylinder", "cone"}},
          {"size", {"large"}},
          {"scene", {"indoor"}}},
         "large objects except torus are not present in indoor scene"},
        {{{"object", {"sphere", "cylinder", "cube"}},
          {"size", {"large"}},
          {"scene", {"tunnel", "moonlit_grass"}}},
         "large spheres, cylinders and cubes are not present in tunnel and moonlit grass"},
        {{{"size", {"large"}}, {"scene", {"hall"}}},
         "large objects are not present in hall scenes"},
        {{{"size", {"small"}}, {"scene", {"grassland", "garage"}}},
         "small objects are not present in grassland and garage scenes"},
        {{{"color", {"yellow"}}, {"scene", {"bridge", "city_square"}}},
         "yellow objects are not present on bridge and city square scenes"},
        {{{"color", {"orange", "yellow"}}, {"scene", {"station", "dusk_city", "playground"}}},
         "orange and yellow objects are not present in station, dusk city and playground"},
        {{{"object", {"cone"}}, {"scene", {"hall", "tunnel", "skywalk"}}},
         "cones are not present in hall, tunnel and skywalk scenes"},
        {{{"object", {"cone"}}, {"color", {"orange"}}, {"scene", {"bridge"}}},
         "orange cones are not present on bridge scenes"},
        {{{"object", {"sphere"}}, {"scene", {"skywalk"}}},
         "spheres are not present in skywalk scenes"},
    };
    g.nuisance = {
        {"camera_jitter", "random offset of the captured frame"},
        {"light_scene_interaction", "brightness coupling of light source and scene"},
    };
    return g;
}

ImageRecord render_candle_lite(const scm::FactorAssignment& assignment,
                               const RenderOptions& opts) {
    const auto graph = candle_lite_graph();
    if (!check_constraints(assignment, graph))
        throw ConstraintError("assignment violates CANDLE-lite confounding rules");
    const int W = opts.width, H = opts.height;
    if (W < 32 || H < 32 || W > 320 || H > 240)
        throw scm::SchemaError("candle-lite resolution out of supported range");

    const std::size_t scene_idx = factor_index(graph, assignment, "scene");
    const std::size_t light_idx = factor_index(graph, assignment, "light");
    const std::size_t size_idx = factor_index(graph, assignment, "size");
    const ScenePalette& pal = scene_palettes()[scene_idx];

    // Unobserved confounder analog: the artificial light interacts with the
    // scene's natural lighting. Pixels only; no metadata field.
    const double interaction =
        0.90 + 0.03 * static_cast<double>((scene_idx * 7 + light_idx * 13) % 5);

    ImageRecord rec;
    rec.assignment = assignment;
    rec.pixels.width = W;
    rec.pixels.height = H;
    rec.pixels.rgb.resize(static_cast<std::size_t>(W) * H * 3);

    const int horizon = static_cast<int>(0.60 * H);
    for (int y = 0; y < H; ++y) {
        double t;
        Rgb a, b;
        if (y < horizon) {
            t = static_cast<double>(y) / horizon;
            a = pal.sky_top;
            b = pal.sky_bottom;
        } else {
            t = static_cast<double>(y - horizon) / (H - horizon);
            a = pal.ground;
            b = {pal.ground.r * 0.72, pal.ground.g * 0.72, pal.ground.b * 0.72};
        }
        for (int x = 0; x < W; ++x) {
            // low-frequency horizontal texture keyed by the scene
            const double tex =
                1.0 + 0.05 * std::sin((x * (2.0 + scene_idx % 5) + scene_idx * 11.0) * 2.0 *
                                      kPi / W);
            std::uint8_t* p = rec.pixels.pixel(x, y);
            p[0] = static_cast<std::uint8_t>(
                std::clamp((a.r + t * (b.r - a.r)) * tex * interaction, 0.0, 1.0) * 255.0);
            p[1] = static_cast<std::uint8_t>(
                std::clamp((a.g + t * (b.g - a.g)) * tex * interaction, 0.0, 1.0) * 255.0);
            p[2] = static_cast<std::uint8_t>(
                std::clamp((a.b + t * (b.b - a.b)) * tex * interaction, 0.0, 1.0) * 255.0);
        }
    }

    // Camera jitter from the record seed.
    std::uint64_t rng = assignment.seed * 0x9e3779b97f4a7c15ULL + 0x1234;
    const double jx = (scm::next_unit(rng) - 0.5) * 0.06 * W;
    const double jy = (scm::next_unit(rng) - 0.5) * 0.035 * H;

    static const double kSizeFrac[3] = {0.20, 0.27, 0.34};
    const double radius = 0.5 * kSizeFrac[size_idx] * W;
    const double cx = 0.5 * W + jx;
    const double base_y = horizon + 0.55 * (H - horizon) + jy;
    const double cy = base_y - radius;

    // Shadow: an ellipse on the floor displaced away from the light.
    const double light_x = (0.25 + 0.25 * light_idx) * W;
    const double shadow_dx = 0.35 * (cx - light_x);
    darken_ellipse(rec.pixels, cx + shadow_dx, base_y + 0.25 * radius, radius * 1.25,
                   radius * 0.38, 0.55 + 0.1 * light_idx);

    const double angle_rad = std::stod(assignment.at("angle")) * kPi / 180.0;
    const auto& object = assignment.at("object");
    const auto res = draw_shape(rec.pixels, object, factor_color(assignment.at("color")), cx,
                                cy, radius, angle_rad, interaction);

    // Orientation marker: a darker radial stripe along the object's up axis.
    // The real dataset's 3D renders expose rotation through texture and
    // shading; a flat silhouette needs an explicit cue or rotation becomes
    // unidentifiable for symmetric objects. Only pixels already covered by
    // the silhouette are darkened, so the bounds stay exact.
    {
        const double ux = std::sin(angle_rad), uy = -std::cos(angle_rad);  // screen up
        const int x_lo = std::max(0, static_cast<int>(std::floor(cx - radius - 2)));
        const int x_hi =
            std::min(W - 1, static_cast<int>(std::ceil(cx + radius + 2)));
        const int y_lo = std::max(0, static_cast<int>(std::floor(cy - radius - 2)));
        const int y_hi =
            std::min(H - 1, static_cast<int>(std::ceil(cy + radius + 2)));
        for (int y = y_lo; y <= y_hi; ++y) {
            for (int x = x_lo; x <= x_hi; ++x) {
                const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
                const double along = dx * ux + dy * uy;
                const double across = dx * uy - dy * ux;
                const double tip_dx = dx - 0.70 * radius * ux;
                const double tip_dy = dy - 0.70 * radius * uy;
                const bool on_tip = tip_dx * tip_dx + tip_dy * tip_dy <= 1.5 * 1.5;
                const bool on_stripe =
                    along >= 0.0 && along <= 0.95 * radius && std::abs(across) <= 1.6;
                if (!on_tip && !on_stripe) continue;
                if (coverage(object, x, y, cx, cy, radius, angle_rad) < 0.5) continue;
                std::uint8_t* p = rec.pixels.pixel(x, y);
                if (on_tip) {
                    // Brightened object color (screen blend), not plain white:
                    // every foreground pixel must keep depending on the color
                    // factor so the bounds stay recoverable from color diffs.
                    for (int ch = 0; ch < 3; ++ch)
                        p[ch] = static_cast<std::uint8_t>(255 - (255 - p[ch]) / 4);
                } else {
                    for (int ch = 0; ch < 3; ++ch)
                        p[ch] = static_cast<std::uint8_t>(p[ch] * 0.35);
                }
            }
        }
    }
    rec.bounds = res.bounds;
    return rec;
}

// --- dSprites-style grid ---------------------------------------------------

scm::CausalGraphSpec grid_graph() {
    scm::CausalGraphSpec g;
    std::vector<std::string> orientations;
    for (int a = 0; a < 360; a += 30) orientations.push_back(std::to_string(a));
    g.factors = {
        {"shape", {"square", "ellipse", "heart"}},
        {"size", {"small", "medium", "large"}},
        {"orientation", orientations},
        {"pos_x", {"left", "center_left", "center_right", "right"}},
        {"pos_y", {"bottom", "center_bottom", "center_top", "top"}},
    };
    return g;
}

ImageRecord render_grid(const scm::FactorAssignment& assignment) {
    const auto graph = grid_graph();
    if (!check_constraints(assignment, graph))
        throw ConstraintError("invalid grid assignment");
    ImageRecord rec;
    rec.assignment = assignment;
    rec.pixels = Image::filled(kGridImageSize, kGridImageSize, 0, 0, 0);

    const std::size_t size_idx = factor_index(graph, assignment, "size");
    const std::size_t px = factor_index(graph, assignment, "pos_x");
    const std::size_t py = factor_index(graph, assignment, "pos_y");
    static const double kRadius[3] = {6.0, 9.0, 12.0};
    const double cx = 14.0 + 12.0 * px;
    const double cy = kGridImageSize - (14.0 + 12.0 * py);  // pos_y counts up from bottom
    const double angle_rad = std::stod(assignment.at("orientation")) * kPi / 180.0;

    const auto res = draw_shape(rec.pixels, assignment.at("shape"), factor_color("white"), cx,
                                cy, kRadius[size_idx], angle_rad);
    rec.bounds = res.bounds;
    return rec;
}

// --- Registry --------------------------------------------------------------

bool renderer_known(const std::string& name) {
    return name == "toy" || name == "candle-lite" || name == "grid";
}

scm::CausalGraphSpec builtin_graph(const std::string& renderer) {
    if (renderer == "toy") return toy_graph();
    if (renderer == "candle-lite") return candle_lite_graph();
    if (renderer == "grid") return grid_graph();
    throw scm::SchemaError("unknown renderer '" + renderer + "'");
}

ImageRecord render(const std::string& renderer, const scm::FactorAssignment& assignment,
                   const RenderOptions& opts) {
    if (renderer == "toy") return render_toy(assignment);
    if (renderer == "candle-lite") return render_candle_lite(assignment, opts);
    if (renderer == "grid") return render_grid(assignment);
    throw scm::SchemaError("unknown renderer '" + renderer + "'");
}

int nuisance_variants(const std::string& renderer) {
    if (renderer == "toy") return kToyNuisanceVariants;
    return 1;
}

}  // namespace cdb::datagen
