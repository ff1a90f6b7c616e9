#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace tae {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::sqrt(dot(v, v)); }

// Planar rigid transform: rotation by theta followed by translation (x, y).
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 apply(Vec2 p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {x + c * p.x - s * p.y, y + s * p.x + c * p.y};
  }

  Pose2 compose(const Pose2& other) const {
    const Vec2 t = apply({other.x, other.y});
    return {t.x, t.y, theta + other.theta};
  }

  Pose2 inverse() const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {-(c * x + s * y), -(-s * x + c * y), -theta};
  }

  Vec2 translation() const { return {x, y}; }
};

inline double normalize_angle(double a) {  // into [0, 2*pi)
  const double two_pi = 2.0 * M_PI;
  a = std::fmod(a, two_pi);
  if (a < 0) a += two_pi;
  return a;
}

// Simple polygon, counter-clockwise preferred but not required.
using Polygon = std::vector<Vec2>;

Polygon transformed(const Polygon& poly, const Pose2& pose);
Polygon make_rect(Vec2 center, double half_x, double half_y);

double polygon_area(const Polygon& poly);          // signed
Vec2 polygon_centroid(const Polygon& poly);        // area centroid
double circumradius(const Polygon& poly);          // max vertex distance from origin

// Even-odd crossing test. Boundary points are not handled specially.
bool point_in_polygon(const Polygon& poly, Vec2 p);

// True when the interiors intersect; touching edges do not count.
bool polygons_overlap(const Polygon& a, const Polygon& b);

// Interval on an axis; used for projection shadows.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi > lo ? hi - lo : 0.0; }
};

Interval y_shadow(const Polygon& poly);
double interval_overlap(Interval a, Interval b);

// Smallest t >= 0 such that `moving` translated by t*dir touches `target`,
// or nullopt if they never meet. Exact vertex/edge continuous collision.
std::optional<double> sweep_gap(const Polygon& moving, Vec2 dir, const Polygon& target);

}  // namespace tae
