#pragma once

// Procedural renderers. All of them are deterministic functions of
// (assignment, assignment.seed); nuisance effects (camera jitter,
// light-scene brightness interaction, toy position/size variation) are
// derived from the seed and never appear in metadata.

#include <string>

#include "cdb/datagen/image.hpp"
#include "cdb/scm/graph.hpp"

namespace cdb::datagen {

struct ImageRecord {
    Image pixels;
    scm::FactorAssignment assignment;
    Bounds bounds;
    std::string id;
};

struct ConstraintError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- Built-in causal graphs ------------------------------------------------

// Fully confounded shape/color toy set: cylinders are red, cones green,
// cubes blue. 3 valid assignments; 144 nuisance variants each -> 432 images.
scm::CausalGraphSpec toy_graph();
inline constexpr int kToyImageSize = 128;
inline constexpr int kToyNuisanceVariants = 144;  // 6 x positions * 6 y positions * 4 sizes

// 6 factors (3*16*5*3*5*6 raw combinations) with the default observed
// confounding rule set over scene/object/size/color.
scm::CausalGraphSpec candle_lite_graph();

// dSprites-style grid: shape * size * orientation * pos_x * pos_y, no
// confounding; target of the Table-7-style conditioning filters.
scm::CausalGraphSpec grid_graph();
inline constexpr int kGridImageSize = 64;

struct RenderOptions {
    int width = 64;
    int height = 64;
};

ImageRecord render_toy(const scm::FactorAssignment& assignment);
ImageRecord render_candle_lite(const scm::FactorAssignment& assignment,
                               const RenderOptions& opts = {});
ImageRecord render_grid(const scm::FactorAssignment& assignment);

// Renderer registry: name in {"toy", "candle-lite", "grid"}.
bool renderer_known(const std::string& name);
scm::CausalGraphSpec builtin_graph(const std::string& renderer);
ImageRecord render(const std::string& renderer, const scm::FactorAssignment& assignment,
                   const RenderOptions& opts = {});
// Records per valid assignment (toy enumerates its nuisance variants).
int nuisance_variants(const std::string& renderer);

}  // namespace cdb::datagen
