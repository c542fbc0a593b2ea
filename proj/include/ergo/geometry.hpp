#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "ergo/common.hpp"

namespace ergo {

// ---------------------------------------------------------------------------
// Core placement types
// ---------------------------------------------------------------------------

/// Planar placement of an asset. Height is not optimized; z_base is assigned
/// by stacking resolution after optimization.
struct Pose {
  double x = 0.0;       // meters
  double y = 0.0;       // meters
  double yaw = 0.0;     // radians, counterclockwise from +X
  double z_base = 0.0;  // meters, assigned

  Vec2 position() const { return {x, y}; }
};

/// Local frame convention: +X right, +Y forward. The front of an object is
/// its local +Y rotated into the world by yaw.
inline Vec2 front_direction(double yaw) { return {-std::sin(yaw), std::cos(yaw)}; }
inline Vec2 front_direction(const Pose& pose) { return front_direction(pose.yaw); }

/// Oriented rectangle on the floor plane.
struct OrientedFootprint {
  Vec2 center;
  double half_width = 0.0;  // local +X extent
  double half_depth = 0.0;  // local +Y extent
  double yaw = 0.0;

  /// World-frame local axes.
  Vec2 axis_x() const { return {std::cos(yaw), std::sin(yaw)}; }
  Vec2 axis_y() const { return {-std::sin(yaw), std::cos(yaw)}; }

  /// Corners in counterclockwise order.
  std::array<Vec2, 4> corners() const {
    const Vec2 ax = axis_x() * half_width;
    const Vec2 ay = axis_y() * half_depth;
    return {center + ax + ay, center - ax + ay, center - ax - ay, center + ax - ay};
  }

  double area() const { return 4.0 * half_width * half_depth; }
};

inline OrientedFootprint footprint_at(const Pose& pose, double half_width,
                                      double half_depth) {
  return {{pose.x, pose.y}, half_width, half_depth, pose.yaw};
}

/// Axis-aligned room. Walls are indexed counterclockwise:
/// 0 = south (y = 0), 1 = east (x = W), 2 = north (y = D), 3 = west (x = 0).
struct Room {
  double width = 0.0;   // W, extent along x
  double depth = 0.0;   // D, extent along y
  double height = 0.0;

  static constexpr int kSouth = 0;
  static constexpr int kEast = 1;
  static constexpr int kNorth = 2;
  static constexpr int kWest = 3;
};

/// Yaw that puts an object's back flush against a wall, front into the room.
inline double wall_back_yaw(int wall_index) {
  return normalize_angle(static_cast<double>(wall_index) * (kPi / 2.0));
}

inline double bounding_circle_radius(double half_width, double half_depth) {
  return std::sqrt(half_width * half_width + half_depth * half_depth);
}

inline double bounding_circle_radius(const OrientedFootprint& f) {
  return bounding_circle_radius(f.half_width, f.half_depth);
}

// ---------------------------------------------------------------------------
// Separating-axis penetration depth
// ---------------------------------------------------------------------------

namespace detail {

/// Projection radius of a footprint onto a unit axis.
inline double projection_radius(const OrientedFootprint& f, const Vec2& axis) {
  return f.half_width * std::abs(axis.dot(f.axis_x())) +
         f.half_depth * std::abs(axis.dot(f.axis_y()));
}

}  // namespace detail

/// Minimal translation distance separating two oriented boxes, or 0 when
/// they are disjoint or touching. For a pair of rectangles the minimal
/// translation is always along one of the four face normals, so testing the
/// four axes is exact.
inline double penetration_depth(const OrientedFootprint& a, const OrientedFootprint& b) {
  const Vec2 t = b.center - a.center;
  const std::array<Vec2, 4> axes = {a.axis_x(), a.axis_y(), b.axis_x(), b.axis_y()};
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& axis : axes) {
    const double overlap = detail::projection_radius(a, axis) +
                           detail::projection_radius(b, axis) -
                           std::abs(t.dot(axis));
    if (overlap <= 0.0) return 0.0;
    best = std::min(best, overlap);
  }
  return best;
}

/// Gradient of one pose's (x, y, yaw) triple.
struct PoseGrad {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  PoseGrad& operator+=(const PoseGrad& o) {
    x += o.x;
    y += o.y;
    yaw += o.yaw;
    return *this;
  }
  PoseGrad operator*(double s) const { return {x * s, y * s, yaw * s}; }
};

/// penetration_depth plus its analytic derivative with respect to both box
/// poses (center and yaw; the half extents are treated as constants).
///
/// The function is non-smooth where the minimizing axis switches and where a
/// projected sign flips; at those measure-zero loci the reported gradient is
/// the one-sided derivative of the first minimizing axis in the fixed test
/// order (a.x, a.y, b.x, b.y).
inline double penetration_depth_grad(const OrientedFootprint& a,
                                     const OrientedFootprint& b, PoseGrad& grad_a,
                                     PoseGrad& grad_b) {
  grad_a = {};
  grad_b = {};
  const Vec2 t = b.center - a.center;

  struct Axis {
    Vec2 u;
    Vec2 du;      // du/dtheta of the owner
    bool owner_a;
  };
  const std::array<Axis, 4> axes = {{
      {a.axis_x(), a.axis_y(), true},
      {a.axis_y(), a.axis_x() * -1.0, true},
      {b.axis_x(), b.axis_y(), false},
      {b.axis_y(), b.axis_x() * -1.0, false},
  }};

  double best = std::numeric_limits<double>::infinity();
  int best_index = -1;
  for (int i = 0; i < 4; ++i) {
    const double overlap = detail::projection_radius(a, axes[std::size_t(i)].u) +
                           detail::projection_radius(b, axes[std::size_t(i)].u) -
                           std::abs(t.dot(axes[std::size_t(i)].u));
    if (overlap <= 0.0) return 0.0;
    if (overlap < best) {
      best = overlap;
      best_index = i;
    }
  }

  const Axis& ax = axes[static_cast<std::size_t>(best_index)];
  // The owner's own projection radius onto its own axis is a constant
  // (half_width or half_depth), so only the partner's radius and the center
  // term carry derivatives.
  const OrientedFootprint& other = ax.owner_a ? b : a;
  const Vec2 ox = other.axis_x();
  const Vec2 oy = other.axis_y();
  const double s1 = ax.u.dot(ox) >= 0.0 ? 1.0 : -1.0;
  const double s2 = ax.u.dot(oy) >= 0.0 ? 1.0 : -1.0;
  const double st = t.dot(ax.u) >= 0.0 ? 1.0 : -1.0;

  // d(overlap)/d(theta_owner): the axis itself rotates.
  const double d_other_radius_d_owner =
      other.half_width * s1 * ax.du.dot(ox) + other.half_depth * s2 * ax.du.dot(oy);
  const double d_center_d_owner = st * t.dot(ax.du);
  // d(overlap)/d(theta_other): the partner box rotates under a fixed axis.
  // d(axis_x)/dtheta = axis_y, d(axis_y)/dtheta = -axis_x.
  const double d_other_radius_d_other =
      other.half_width * s1 * ax.u.dot(oy) - other.half_depth * s2 * ax.u.dot(ox);

  PoseGrad& owner = ax.owner_a ? grad_a : grad_b;
  PoseGrad& partner = ax.owner_a ? grad_b : grad_a;
  owner.yaw = d_other_radius_d_owner - d_center_d_owner;
  partner.yaw = d_other_radius_d_other;

  // t = b.center - a.center, overlap depends on -|t.u|.
  grad_a.x += st * ax.u.x;
  grad_a.y += st * ax.u.y;
  grad_b.x -= st * ax.u.x;
  grad_b.y -= st * ax.u.y;
  return best;
}

// ---------------------------------------------------------------------------
// Polygon clipping and overlap ratio
// ---------------------------------------------------------------------------

namespace detail {

/// Sutherland-Hodgman clip of a convex polygon against the half-plane to the
/// left of the directed edge (e0 -> e1).
inline std::vector<Vec2> clip_against_edge(const std::vector<Vec2>& poly, const Vec2& e0,
                                           const Vec2& e1) {
  std::vector<Vec2> out;
  out.reserve(poly.size() + 1);
  const Vec2 edge = e1 - e0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& cur = poly[i];
    const Vec2& nxt = poly[(i + 1) % n];
    const double side_cur = edge.cross(cur - e0);
    const double side_nxt = edge.cross(nxt - e0);
    if (side_cur >= 0.0) out.push_back(cur);
    if ((side_cur >= 0.0) != (side_nxt >= 0.0)) {
      const double denom = side_cur - side_nxt;
      if (denom != 0.0) {
        const double s = side_cur / denom;
        out.push_back(cur + (nxt - cur) * s);
      }
    }
  }
  return out;
}

inline double polygon_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    twice += p.cross(q);
  }
  return 0.5 * std::abs(twice);
}

}  // namespace detail

/// Intersection area of two convex footprints via polygon clipping.
inline double intersection_area(const OrientedFootprint& a, const OrientedFootprint& b) {
  const auto ca = a.corners();
  std::vector<Vec2> poly(ca.begin(), ca.end());
  const auto cb = b.corners();
  for (std::size_t i = 0; i < 4 && !poly.empty(); ++i) {
    poly = detail::clip_against_edge(poly, cb[i], cb[(i + 1) % 4]);
  }
  return detail::polygon_area(poly);
}

/// Intersection area divided by the smaller footprint area, in [0, 1].
/// Defined as 0 when either footprint has zero area.
inline double overlap_ratio(const OrientedFootprint& a, const OrientedFootprint& b) {
  const double smaller = std::min(a.area(), b.area());
  if (smaller <= 0.0) return 0.0;
  const double ratio = intersection_area(a, b) / smaller;
  return std::clamp(ratio, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Wall distance
// ---------------------------------------------------------------------------

namespace detail {

/// Inward unit normal of a wall.
inline Vec2 wall_inward_normal(int wall_index) {
  switch (wall_index) {
    case Room::kSouth: return {0.0, 1.0};
    case Room::kEast: return {-1.0, 0.0};
    case Room::kNorth: return {0.0, -1.0};
    default: return {1.0, 0.0};  // west
  }
}

/// Signed inward distance from a point to a wall line.
inline double wall_point_distance(const Vec2& p, const Room& room, int wall_index) {
  switch (wall_index) {
    case Room::kSouth: return p.y;
    case Room::kEast: return room.width - p.x;
    case Room::kNorth: return room.depth - p.y;
    default: return p.x;  // west
  }
}

}  // namespace detail

/// Signed minimum distance from the footprint's nearest corner to the wall
/// line. Negative means that corner lies outside the room through that wall.
inline double wall_distance(const OrientedFootprint& f, const Room& room,
                            int wall_index) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& c : f.corners()) {
    best = std::min(best, detail::wall_point_distance(c, room, wall_index));
  }
  return best;
}

/// wall_distance with its derivative with respect to the footprint pose.
/// Non-smooth where the nearest corner switches; ties take the first corner
/// in counterclockwise order.
inline double wall_distance_grad(const OrientedFootprint& f, const Room& room,
                                 int wall_index, PoseGrad& grad) {
  const auto corners = f.corners();
  double best = std::numeric_limits<double>::infinity();
  int best_corner = 0;
  for (int i = 0; i < 4; ++i) {
    const double d =
        detail::wall_point_distance(corners[static_cast<std::size_t>(i)], room, wall_index);
    if (d < best) {
      best = d;
      best_corner = i;
    }
  }
  const Vec2 n = detail::wall_inward_normal(wall_index);
  // corner = center + R(yaw) * offset; d(corner)/dyaw rotates the offset by
  // 90 degrees, i.e. equals (corner - center).perp().
  const Vec2 arm = corners[static_cast<std::size_t>(best_corner)] - f.center;
  grad.x = n.x;
  grad.y = n.y;
  grad.yaw = n.dot(arm.perp());
  return best;
}

// ---------------------------------------------------------------------------
// Point and pair distances
// ---------------------------------------------------------------------------

inline bool footprint_contains_point(const OrientedFootprint& f, const Vec2& p) {
  const Vec2 d = p - f.center;
  return std::abs(d.dot(f.axis_x())) <= f.half_width + 1e-12 &&
         std::abs(d.dot(f.axis_y())) <= f.half_depth + 1e-12;
}

/// Euclidean distance from a point to an oriented footprint (0 inside).
inline double footprint_point_distance(const OrientedFootprint& f, const Vec2& p) {
  const Vec2 d = p - f.center;
  const double ex = std::max(0.0, std::abs(d.dot(f.axis_x())) - f.half_width);
  const double ey = std::max(0.0, std::abs(d.dot(f.axis_y())) - f.half_depth);
  return std::sqrt(ex * ex + ey * ey);
}

/// Distance between two oriented footprints (0 when touching/overlapping).
/// For disjoint convex rectangles the minimum is realized at a corner of one
/// against the other, so checking both corner sets is exact.
inline double footprint_pair_distance(const OrientedFootprint& a,
                                      const OrientedFootprint& b) {
  if (penetration_depth(a, b) > 0.0) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& c : a.corners()) best = std::min(best, footprint_point_distance(b, c));
  for (const Vec2& c : b.corners()) best = std::min(best, footprint_point_distance(a, c));
  return best;
}

/// Axis-aligned bounds of an oriented footprint.
struct Bounds2 {
  Vec2 min;
  Vec2 max;
};

inline Bounds2 aabb_of(const OrientedFootprint& f) {
  Bounds2 b{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
            {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  for (const Vec2& c : f.corners()) {
    b.min.x = std::min(b.min.x, c.x);
    b.min.y = std::min(b.min.y, c.y);
    b.max.x = std::max(b.max.x, c.x);
    b.max.y = std::max(b.max.y, c.y);
  }
  return b;
}

}  // namespace ergo
