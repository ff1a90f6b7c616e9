#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tae/geometry.hpp"

namespace tae {

// Square world-aligned map window. Pixel (0,0) sits at bounds_min; row index
// follows the y axis.
struct MapGeometry {
  Vec2 bounds_min;
  Vec2 bounds_max;
  int resolution = 0;       // pixels per side
  double height_clip = 0.0; // meters

  double pixel_size() const { return (bounds_max.x - bounds_min.x) / resolution; }
  bool valid() const {
    return resolution > 0 && bounds_max.x > bounds_min.x && bounds_max.y > bounds_min.y;
  }
  bool contains(Vec2 p) const {
    return p.x >= bounds_min.x && p.x < bounds_max.x && p.y >= bounds_min.y &&
           p.y < bounds_max.y;
  }
};

struct PixelIndex {
  int i = 0;  // row (y)
  int j = 0;  // column (x)
  bool operator==(const PixelIndex&) const = default;
};

std::optional<PixelIndex> world_to_pixel(const MapGeometry& geom, Vec2 p);
Vec2 pixel_to_world(const MapGeometry& geom, PixelIndex idx);  // cell center

struct GridMap {
  int width = 0;
  int height = 0;
  double pixel_size = 0.0;
  Vec2 origin;  // world position of the corner of pixel (0,0)
  std::vector<float> values;  // row-major, values[i*width + j]

  static GridMap make(const MapGeometry& geom);
  float at(int i, int j) const { return values[size_t(i) * width + j]; }
  float& at(int i, int j) { return values[size_t(i) * width + j]; }
  bool in_range(int i, int j) const { return i >= 0 && i < height && j >= 0 && j < width; }
};

// Cell-center-in-polygon rasterization: covered pixels carry `value`, the
// rest stay 0. Existing pixel values combine by max.
GridMap render_footprint(const Polygon& poly, const MapGeometry& geom, float value);
void render_footprint_into(GridMap& map, const MapGeometry& geom, const Polygon& poly,
                           float value);
// Sets covered pixels to `value` unconditionally (used for mask overrides).
void stamp_footprint(GridMap& map, const MapGeometry& geom, const Polygon& poly,
                     float value);

enum class Resample { bilinear, nearest };

// Resamples a square map rotated by `angle` about its center. Out-of-support
// samples read as 0. `nearest` keeps {0,1} masks exactly binary.
GridMap rotate_map(const GridMap& m, double angle, Resample mode);

// Integer shift by (dx, dy) pixels with zero fill.
GridMap shift_map(const GridMap& m, int dx, int dy);

// --- RGM1 binary tensor file ---------------------------------------------
// magic "RGM1", u32le H, W, C, then H*W*C f32le, row-major, channel-last.
void write_rgm1(const std::filesystem::path& path, int h, int w, int c,
                const float* channel_last);
void write_rgm1_channels(const std::filesystem::path& path,
                         std::span<const GridMap* const> channels);

struct Rgm1 {
  int h = 0, w = 0, c = 0;
  std::vector<float> data;  // channel-last
  float at(int i, int j, int k) const { return data[(size_t(i) * w + j) * c + k]; }
};
Rgm1 read_rgm1(const std::filesystem::path& path);

}  // namespace tae
