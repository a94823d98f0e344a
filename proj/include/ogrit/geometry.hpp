#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace ogrit {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  Vec2 operator/(double k) const { return {x / k, y / k}; }
  bool operator==(const Vec2&) const = default;

  [[nodiscard]] double norm() const { return std::hypot(x, y); }
  [[nodiscard]] double angle() const { return std::atan2(y, x); }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }
inline Vec2 unit_from_angle(double a) { return {std::cos(a), std::sin(a)}; }

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

using Polyline = std::vector<Vec2>;
using Polygon = std::vector<Vec2>;

double signed_area(std::span<const Vec2> poly);
double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b);
double distance_to_boundary(std::span<const Vec2> poly, const Vec2& p);

/// Closed containment: points on the boundary count as inside.
bool point_in_polygon(std::span<const Vec2> poly, const Vec2& p, double boundary_tol = 1e-9);

/// Closed segment intersection, collinear overlaps included.
bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

/// Proper or touching intersection of two segments; returns the parameter along a->b.
std::optional<double> segment_intersection_param(const Vec2& a, const Vec2& b, const Vec2& c,
                                                 const Vec2& d);

/// True if the closed segment a-b touches the polygon's interior or boundary.
bool segment_hits_polygon(const Vec2& a, const Vec2& b, std::span<const Vec2> poly);

/// No two non-adjacent edges intersect and no edge is degenerate.
bool is_simple_polygon(std::span<const Vec2> poly);

/// Polyline with cached arclength, used for lane midlines and vehicle routes.
class PolylinePath {
 public:
  struct Projection {
    double s{0.0};        // arclength of the closest point
    double lateral{0.0};  // signed offset, left of travel direction positive
    double distance{0.0};
    Vec2 point;
    double heading{0.0};
  };

  PolylinePath() = default;
  explicit PolylinePath(Polyline points);

  [[nodiscard]] const Polyline& points() const { return points_; }
  [[nodiscard]] double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  [[nodiscard]] std::span<const double> cumulative() const { return cumulative_; }

  [[nodiscard]] Vec2 point_at(double s) const;
  [[nodiscard]] double heading_at(double s) const;
  [[nodiscard]] Projection project(const Vec2& p) const;

 private:
  [[nodiscard]] std::size_t segment_at(double s) const;

  Polyline points_;
  std::vector<double> cumulative_;
};

/// Offsets a polyline sideways (left positive), mitring at interior vertices.
Polyline offset_polyline(std::span<const Vec2> line, double offset);

/// Lane-shaped polygon around a midline: left edge forward, right edge backward.
Polygon corridor_polygon(std::span<const Vec2> midline, double half_width);

}  // namespace ogrit
