#include "tae/geometry.hpp"

#include <algorithm>
#include <limits>

namespace tae {

Polygon transformed(const Polygon& poly, const Pose2& pose) {
  Polygon out;
  out.reserve(poly.size());
  for (Vec2 v : poly) out.push_back(pose.apply(v));
  return out;
}

Polygon make_rect(Vec2 center, double half_x, double half_y) {
  return {{center.x - half_x, center.y - half_y},
          {center.x + half_x, center.y - half_y},
          {center.x + half_x, center.y + half_y},
          {center.x - half_x, center.y + half_y}};
}

double polygon_area(const Polygon& poly) {
  double a = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2 p = poly[i], q = poly[(i + 1) % n];
    a += cross(p, q);
  }
  return 0.5 * a;
}

Vec2 polygon_centroid(const Polygon& poly) {
  double a = 0.0, cx = 0.0, cy = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2 p = poly[i], q = poly[(i + 1) % n];
    const double w = cross(p, q);
    a += w;
    cx += (p.x + q.x) * w;
    cy += (p.y + q.y) * w;
  }
  if (std::abs(a) < 1e-300) return poly.empty() ? Vec2{} : poly[0];
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

double circumradius(const Polygon& poly) {
  double r = 0.0;
  for (Vec2 v : poly) r = std::max(r, norm(v));
  return r;
}

bool point_in_polygon(const Polygon& poly, Vec2 p) {
  bool inside = false;
  const size_t n = poly.size();
  if (n < 3) return false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[j], b = poly[i];
    if ((b.y > p.y) != (a.y > p.y)) {
      const double x_int = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
      if (p.x < x_int) inside = !inside;
    }
  }
  return inside;
}

namespace {

// Proper segment crossing (interior intersection on both segments).
bool segments_cross(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

bool polygons_overlap(const Polygon& a, const Polygon& b) {
  if (a.size() < 3 || b.size() < 3) return false;
  for (Vec2 v : a)
    if (point_in_polygon(b, v)) return true;
  for (Vec2 v : b)
    if (point_in_polygon(a, v)) return true;
  const size_t na = a.size(), nb = b.size();
  for (size_t i = 0; i < na; ++i)
    for (size_t j = 0; j < nb; ++j)
      if (segments_cross(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb])) return true;
  return false;
}

Interval y_shadow(const Polygon& poly) {
  Interval s{std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity()};
  for (Vec2 v : poly) {
    s.lo = std::min(s.lo, v.y);
    s.hi = std::max(s.hi, v.y);
  }
  return s;
}

double interval_overlap(Interval a, Interval b) {
  return std::max(0.0, std::min(a.hi, b.hi) - std::max(a.lo, b.lo));
}

namespace {

// Distance t >= 0 at which point p moving along dir hits segment [a, b].
std::optional<double> ray_hits_segment(Vec2 p, Vec2 dir, Vec2 a, Vec2 b) {
  const Vec2 e = b - a;
  const double denom = cross(dir, e);
  if (denom == 0.0) return std::nullopt;  // parallel; endpoints handled elsewhere
  const Vec2 ap = a - p;
  const double t = cross(ap, e) / denom;
  const double s = cross(ap, dir) / denom;
  if (t >= 0.0 && s >= 0.0 && s <= 1.0) return t;
  return std::nullopt;
}

}  // namespace

std::optional<double> sweep_gap(const Polygon& moving, Vec2 dir, const Polygon& target) {
  if (moving.size() < 3 || target.size() < 3) return std::nullopt;
  if (polygons_overlap(moving, target)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const size_t nm = moving.size(), nt = target.size();
  // Vertices of the moving polygon against target edges.
  for (Vec2 v : moving)
    for (size_t j = 0; j < nt; ++j)
      if (auto t = ray_hits_segment(v, dir, target[j], target[(j + 1) % nt]))
        best = std::min(best, *t);
  // Target vertices against moving edges (cast backwards).
  const Vec2 rdir{-dir.x, -dir.y};
  for (Vec2 v : target)
    for (size_t j = 0; j < nm; ++j)
      if (auto t = ray_hits_segment(v, rdir, moving[j], moving[(j + 1) % nm]))
        best = std::min(best, *t);
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

}  // namespace tae
