#include "ogrit/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace ogrit {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

double signed_area(std::span<const Vec2> poly) {
  double area = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    area += cross(poly[j], poly[i]);
  }
  return 0.5 * area;
}

double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

double distance_to_boundary(std::span<const Vec2> poly, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    best = std::min(best, distance_to_segment(p, poly[j], poly[i]));
  }
  return best;
}

bool point_in_polygon(std::span<const Vec2> poly, const Vec2& p, double boundary_tol) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[j];
    const Vec2& b = poly[i];
    if (distance_to_segment(p, a, b) <= boundary_tol) return true;
    if ((b.y > p.y) != (a.y > p.y)) {
      const double x_cross = (a.x - b.x) * (p.y - b.y) / (a.y - b.y) + b.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

namespace {

int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross(b - a, c - a);
  const double scale = std::max({1.0, (b - a).norm() * (c - a).norm()});
  if (std::abs(v) <= 1e-12 * scale) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
         std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

}  // namespace

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

std::optional<double> segment_intersection_param(const Vec2& a, const Vec2& b, const Vec2& c,
                                                 const Vec2& d) {
  const Vec2 r = b - a;
  const Vec2 s = d - c;
  const double denom = cross(r, s);
  if (std::abs(denom) < 1e-15) {
    if (!segments_intersect(a, b, c, d)) return std::nullopt;
    // collinear overlap: earliest point of c-d on a-b
    const double len2 = dot(r, r);
    if (len2 == 0.0) return 0.0;
    const double tc = dot(c - a, r) / len2;
    const double td = dot(d - a, r) / len2;
    return std::clamp(std::min(tc, td), 0.0, 1.0);
  }
  const double t = cross(c - a, s) / denom;
  const double u = cross(c - a, r) / denom;
  constexpr double eps = 1e-12;
  if (t < -eps || t > 1 + eps || u < -eps || u > 1 + eps) return std::nullopt;
  return std::clamp(t, 0.0, 1.0);
}

bool segment_hits_polygon(const Vec2& a, const Vec2& b, std::span<const Vec2> poly) {
  if (point_in_polygon(poly, a, 0.0) || point_in_polygon(poly, b, 0.0)) return true;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    if (segments_intersect(a, b, poly[j], poly[i])) return true;
  }
  return false;
}

bool is_simple_polygon(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (distance(poly[i], poly[(i + 1) % n]) < 1e-12) return false;
  }
  if (std::abs(signed_area(poly)) < 1e-12) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2& c = poly[j];
      const Vec2& d = poly[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // adjacent edges may only share their common vertex
        const Vec2& shared = (j == i + 1) ? b : a;
        const Vec2& p = (j == i + 1) ? a : b;
        const Vec2& q = (j == i + 1) ? d : c;
        if (orientation(p, shared, q) == 0 && dot(p - shared, q - shared) > 0) return false;
        continue;
      }
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

PolylinePath::PolylinePath(Polyline points) : points_(std::move(points)) {
  if (points_.size() < 2) throw std::invalid_argument("polyline needs at least 2 points");
  cumulative_.reserve(points_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    cumulative_.push_back(cumulative_.back() + distance(points_[i - 1], points_[i]));
  }
}

std::size_t PolylinePath::segment_at(double s) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t idx = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  idx = std::min(idx, points_.size() - 2);
  // skip zero-length segments
  while (idx + 2 < points_.size() && cumulative_[idx + 1] - cumulative_[idx] <= 0.0) ++idx;
  return idx;
}

Vec2 PolylinePath::point_at(double s) const {
  s = std::clamp(s, 0.0, length());
  const std::size_t i = segment_at(s);
  const double seg = cumulative_[i + 1] - cumulative_[i];
  if (seg <= 0.0) return points_[i];
  const double t = (s - cumulative_[i]) / seg;
  return points_[i] + (points_[i + 1] - points_[i]) * t;
}

double PolylinePath::heading_at(double s) const {
  s = std::clamp(s, 0.0, length());
  const std::size_t i = segment_at(s);
  return (points_[i + 1] - points_[i]).angle();
}

PolylinePath::Projection PolylinePath::project(const Vec2& p) const {
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Vec2& a = points_[i];
    const Vec2& b = points_[i + 1];
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) continue;
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    const Vec2 q = a + ab * t;
    const double d = distance(p, q);
    if (d < best.distance) {
      best.distance = d;
      best.point = q;
      best.s = cumulative_[i] + t * std::sqrt(len2);
      best.heading = ab.angle();
      best.lateral = cross(ab, p - a) >= 0 ? d : -d;
    }
  }
  return best;
}

Polyline offset_polyline(std::span<const Vec2> line, double offset) {
  Polyline out;
  out.reserve(line.size());
  const std::size_t n = line.size();
  auto normal = [&](std::size_t i) {
    const Vec2 d = line[i + 1] - line[i];
    const double len = d.norm();
    return Vec2{-d.y / len, d.x / len};
  };
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 nrm;
    if (i == 0) {
      nrm = normal(0);
    } else if (i == n - 1) {
      nrm = normal(n - 2);
    } else {
      const Vec2 n0 = normal(i - 1);
      const Vec2 n1 = normal(i);
      Vec2 m = n0 + n1;
      const double len = m.norm();
      if (len < 1e-9) {
        nrm = n1;
      } else {
        m = m / len;
        const double c = std::max(dot(m, n1), 0.2);
        nrm = m / c;
      }
    }
    out.push_back(line[i] + nrm * offset);
  }
  return out;
}

Polygon corridor_polygon(std::span<const Vec2> midline, double half_width) {
  Polygon poly = offset_polyline(midline, half_width);
  Polyline right = offset_polyline(midline, -half_width);
  poly.insert(poly.end(), right.rbegin(), right.rend());
  return poly;
}

}  // namespace ogrit
