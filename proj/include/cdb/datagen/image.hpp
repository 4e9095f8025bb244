#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace cdb::datagen {

// 8-bit RGB raster, rows stored top-down.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // width * height * 3

    static Image filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);
    std::uint8_t* pixel(int x, int y) { return rgb.data() + 3 * (y * width + x); }
    const std::uint8_t* pixel(int x, int y) const { return rgb.data() + 3 * (y * width + x); }
};

// Bounding box in the metadata convention: bottom-left origin,
// half-open upper edges, 0 <= x0 < x1 <= W, 0 <= y0 < y1 <= H.
struct Bounds {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool operator==(const Bounds&) const = default;
};

// Lossless storage only; lossy formats would break bounds tightness.
void write_png(const Image& img, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

}  // namespace cdb::datagen
