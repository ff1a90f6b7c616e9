#include "tae/grid.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "tae/errors.hpp"

namespace tae {

std::optional<PixelIndex> world_to_pixel(const MapGeometry& geom, Vec2 p) {
  if (!geom.contains(p)) return std::nullopt;
  const double ps = geom.pixel_size();
  const int j = int(std::floor((p.x - geom.bounds_min.x) / ps));
  const int i = int(std::floor((p.y - geom.bounds_min.y) / ps));
  if (i < 0 || i >= geom.resolution || j < 0 || j >= geom.resolution) return std::nullopt;
  return PixelIndex{i, j};
}

Vec2 pixel_to_world(const MapGeometry& geom, PixelIndex idx) {
  const double ps = geom.pixel_size();
  return {geom.bounds_min.x + (idx.j + 0.5) * ps, geom.bounds_min.y + (idx.i + 0.5) * ps};
}

GridMap GridMap::make(const MapGeometry& geom) {
  GridMap m;
  m.width = geom.resolution;
  m.height = geom.resolution;
  m.pixel_size = geom.pixel_size();
  m.origin = geom.bounds_min;
  m.values.assign(size_t(m.width) * m.height, 0.0f);
  return m;
}

namespace {

struct Bbox {
  int i0, i1, j0, j1;  // half-open pixel ranges
};

Bbox poly_pixel_bbox(const GridMap& map, const Polygon& poly) {
  double xmin = poly[0].x, xmax = poly[0].x, ymin = poly[0].y, ymax = poly[0].y;
  for (Vec2 v : poly) {
    xmin = std::min(xmin, v.x);
    xmax = std::max(xmax, v.x);
    ymin = std::min(ymin, v.y);
    ymax = std::max(ymax, v.y);
  }
  const double ps = map.pixel_size;
  Bbox b;
  b.j0 = std::max(0, int(std::floor((xmin - map.origin.x) / ps)) - 1);
  b.j1 = std::min(map.width, int(std::ceil((xmax - map.origin.x) / ps)) + 1);
  b.i0 = std::max(0, int(std::floor((ymin - map.origin.y) / ps)) - 1);
  b.i1 = std::min(map.height, int(std::ceil((ymax - map.origin.y) / ps)) + 1);
  return b;
}

template <class Combine>
void rasterize(GridMap& map, const Polygon& poly, float value, Combine combine) {
  if (poly.size() < 3) return;
  const double ps = map.pixel_size;
  const Bbox b = poly_pixel_bbox(map, poly);
  for (int i = b.i0; i < b.i1; ++i) {
    const double y = map.origin.y + (i + 0.5) * ps;
    for (int j = b.j0; j < b.j1; ++j) {
      const double x = map.origin.x + (j + 0.5) * ps;
      if (point_in_polygon(poly, {x, y})) combine(map.at(i, j), value);
    }
  }
}

}  // namespace

void render_footprint_into(GridMap& map, const MapGeometry& geom, const Polygon& poly,
                           float value) {
  (void)geom;
  rasterize(map, poly, value, [](float& dst, float v) { dst = std::max(dst, v); });
}

void stamp_footprint(GridMap& map, const MapGeometry& geom, const Polygon& poly,
                     float value) {
  (void)geom;
  rasterize(map, poly, value, [](float& dst, float v) { dst = v; });
}

GridMap render_footprint(const Polygon& poly, const MapGeometry& geom, float value) {
  GridMap m = GridMap::make(geom);
  render_footprint_into(m, geom, poly, value);
  return m;
}

GridMap rotate_map(const GridMap& m, double angle, Resample mode) {
  if (m.width != m.height)
    throw std::invalid_argument("rotate_map: map must be square");
  if (angle == 0.0) return m;
  const int n = m.width;
  GridMap out = m;
  const double c = (n - 1) / 2.0;
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // Inverse-rotate the output sample position about the center.
      const double xo = j - c, yo = i - c;
      const double xs = ca * xo + sa * yo + c;
      const double ys = -sa * xo + ca * yo + c;
      float v = 0.0f;
      if (mode == Resample::nearest) {
        const int js = int(std::llround(xs));
        const int is = int(std::llround(ys));
        if (m.in_range(is, js)) v = m.at(is, js);
      } else {
        const int x0 = int(std::floor(xs));
        const int y0 = int(std::floor(ys));
        const double fx = xs - x0, fy = ys - y0;
        auto tap = [&](int ii, int jj) -> double {
          return m.in_range(ii, jj) ? m.at(ii, jj) : 0.0;
        };
        v = float((1 - fy) * ((1 - fx) * tap(y0, x0) + fx * tap(y0, x0 + 1)) +
                  fy * ((1 - fx) * tap(y0 + 1, x0) + fx * tap(y0 + 1, x0 + 1)));
      }
      out.at(i, j) = v;
    }
  }
  return out;
}

GridMap shift_map(const GridMap& m, int dx, int dy) {
  GridMap out = m;
  std::fill(out.values.begin(), out.values.end(), 0.0f);
  for (int i = 0; i < m.height; ++i) {
    const int si = i - dy;
    if (si < 0 || si >= m.height) continue;
    for (int j = 0; j < m.width; ++j) {
      const int sj = j - dx;
      if (sj < 0 || sj >= m.width) continue;
      out.at(i, j) = m.at(si, sj);
    }
  }
  return out;
}

namespace {

void put_u32(std::ofstream& f, uint32_t v) {
  unsigned char b[4] = {(unsigned char)(v & 0xFF), (unsigned char)((v >> 8) & 0xFF),
                        (unsigned char)((v >> 16) & 0xFF), (unsigned char)((v >> 24) & 0xFF)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::ifstream& f) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
         (uint32_t(b[3]) << 24);
}

void put_f32(std::ofstream& f, const float* data, size_t count) {
  // Little-endian host assumed; bytes written directly.
  f.write(reinterpret_cast<const char*>(data), std::streamsize(count * 4));
}

}  // namespace

void write_rgm1(const std::filesystem::path& path, int h, int w, int c,
                const float* channel_last) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f.write("RGM1", 4);
  put_u32(f, uint32_t(h));
  put_u32(f, uint32_t(w));
  put_u32(f, uint32_t(c));
  put_f32(f, channel_last, size_t(h) * w * c);
  if (!f) throw DataError("short write on " + path.string());
}

void write_rgm1_channels(const std::filesystem::path& path,
                         std::span<const GridMap* const> channels) {
  const int c = int(channels.size());
  const int h = channels[0]->height, w = channels[0]->width;
  std::vector<float> interleaved(size_t(h) * w * c);
  for (int k = 0; k < c; ++k) {
    const GridMap& m = *channels[k];
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        interleaved[(size_t(i) * w + j) * c + k] = m.at(i, j);
  }
  write_rgm1(path, h, w, c, interleaved.data());
}

Rgm1 read_rgm1(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "RGM1", 4) != 0)
    throw DataError("bad RGM1 magic in " + path.string());
  Rgm1 t;
  t.h = int(get_u32(f));
  t.w = int(get_u32(f));
  t.c = int(get_u32(f));
  if (t.h <= 0 || t.w <= 0 || t.c <= 0 || size_t(t.h) * t.w * t.c > (1u << 28))
    throw DataError("bad RGM1 dims in " + path.string());
  t.data.resize(size_t(t.h) * t.w * t.c);
  f.read(reinterpret_cast<char*>(t.data.data()), std::streamsize(t.data.size() * 4));
  if (!f) throw DataError("truncated RGM1 file " + path.string());
  return t;
}

}  // namespace tae
