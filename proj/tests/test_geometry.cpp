#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ergo/common.hpp"
#include "ergo/geometry.hpp"
#include "oracles.hpp"

namespace {

using ergo::OrientedFootprint;
using ergo::Pose;
using ergo::Room;
using ergo::Vec2;

OrientedFootprint box(double x, double y, double yaw, double hw, double hd) {
  return ergo::footprint_at(Pose{x, y, yaw, 0.0}, hw, hd);
}

TEST(FrontDirection, MatchesConvention) {
  const Vec2 f0 = ergo::front_direction(0.0);
  EXPECT_NEAR(f0.x, 0.0, 1e-15);
  EXPECT_NEAR(f0.y, 1.0, 1e-15);
  const Vec2 f90 = ergo::front_direction(ergo::kPi / 2.0);
  EXPECT_NEAR(f90.x, -1.0, 1e-15);
  EXPECT_NEAR(f90.y, 0.0, 1e-12);
  const Vec2 f270 = ergo::front_direction(3.0 * ergo::kPi / 2.0);
  EXPECT_NEAR(f270.x, 1.0, 1e-12);
  EXPECT_NEAR(f270.y, 0.0, 1e-12);
}

TEST(NormalizeAngle, WrapsIntoTwoPi) {
  EXPECT_NEAR(ergo::normalize_angle(-ergo::kPi / 2.0), 3.0 * ergo::kPi / 2.0, 1e-12);
  EXPECT_NEAR(ergo::normalize_angle(5.0 * ergo::kPi), ergo::kPi, 1e-12);
  EXPECT_GE(ergo::normalize_angle(-1e-9), 0.0);
  EXPECT_LT(ergo::normalize_angle(123.456), ergo::kTwoPi);
}

TEST(Footprint, CornersAreCounterClockwiseAndAreaMatches) {
  const OrientedFootprint f = box(1.0, 2.0, 0.7, 0.6, 0.4);
  double twice_area = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto cs = f.corners();
    const Vec2& a = cs[i];
    const Vec2& b = cs[(i + 1) % 4];
    twice_area += a.x * b.y - a.y * b.x;
  }
  EXPECT_GT(twice_area, 0.0);  // counter-clockwise
  EXPECT_NEAR(twice_area / 2.0, f.area(), 1e-12);
  EXPECT_NEAR(f.area(), 4.0 * 0.6 * 0.4, 1e-12);
}

TEST(BoundingCircle, CoversCorners) {
  const OrientedFootprint f = box(0.0, 0.0, 0.3, 0.5, 0.2);
  const double r = ergo::bounding_circle_radius(f);
  EXPECT_NEAR(r, std::hypot(0.5, 0.2), 1e-12);
  EXPECT_NEAR(r, ergo::bounding_circle_radius(0.5, 0.2), 1e-15);
  for (const Vec2& c : f.corners()) {
    EXPECT_NEAR((c - f.center).norm(), r, 1e-12);
  }
}

TEST(PenetrationDepth, DisjointBoxesGiveZero) {
  const OrientedFootprint a = box(0.0, 0.0, 0.0, 0.5, 0.5);
  const OrientedFootprint b = box(2.0, 0.0, 0.4, 0.5, 0.5);
  EXPECT_DOUBLE_EQ(ergo::penetration_depth(a, b), 0.0);
}

TEST(PenetrationDepth, AxisAlignedOverlapIsMinimumAxisOverlap) {
  // Boxes overlap by 0.3 in x and 0.8 in y; SAT depth is the smaller.
  const OrientedFootprint a = box(0.0, 0.0, 0.0, 0.5, 0.5);
  const OrientedFootprint b = box(0.7, 0.2, 0.0, 0.5, 0.5);
  EXPECT_NEAR(ergo::penetration_depth(a, b), 0.3, 1e-12);
}

TEST(PenetrationDepth, CoincidentBoxesGiveFullExtent) {
  const OrientedFootprint a = box(1.0, 1.0, 0.2, 0.4, 0.3);
  EXPECT_NEAR(ergo::penetration_depth(a, a), 0.6, 1e-12);
}

TEST(PenetrationDepth, SymmetricInArguments) {
  ergo::Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const OrientedFootprint a = box(rng.uniform(0, 2), rng.uniform(0, 2),
                                    rng.uniform(0, 6.28), rng.uniform(0.1, 0.8),
                                    rng.uniform(0.1, 0.8));
    const OrientedFootprint b = box(rng.uniform(0, 2), rng.uniform(0, 2),
                                    rng.uniform(0, 6.28), rng.uniform(0.1, 0.8),
                                    rng.uniform(0.1, 0.8));
    EXPECT_DOUBLE_EQ(ergo::penetration_depth(a, b), ergo::penetration_depth(b, a));
  }
}

TEST(PenetrationDepthGrad, MatchesCentralDifferences) {
  ergo::Rng rng(7);
  int checked = 0;
  for (int trial = 0; trial < 400 && checked < 100; ++trial) {
    const double hw_a = rng.uniform(0.2, 0.7);
    const double hd_a = rng.uniform(0.2, 0.7);
    const double hw_b = rng.uniform(0.2, 0.7);
    const double hd_b = rng.uniform(0.2, 0.7);
    std::vector<double> x = {rng.uniform(0, 0.6), rng.uniform(0, 0.6),
                             rng.uniform(0, 6.28), rng.uniform(0, 0.6),
                             rng.uniform(0, 0.6),  rng.uniform(0, 6.28)};
    const auto depth = [&](const std::vector<double>& v) {
      const OrientedFootprint fa = box(v[0], v[1], v[2], hw_a, hd_a);
      const OrientedFootprint fb = box(v[3], v[4], v[5], hw_b, hd_b);
      return ergo::penetration_depth(fa, fb);
    };
    if (depth(x) < 1e-3) continue;

    // Reject configurations near the minimum-axis switch, where the
    // subgradient is not a classical derivative.
    const OrientedFootprint fa = box(x[0], x[1], x[2], hw_a, hd_a);
    const OrientedFootprint fb = box(x[3], x[4], x[5], hw_b, hd_b);
    const Vec2 axes[4] = {fa.axis_x(), fa.axis_y(), fb.axis_x(), fb.axis_y()};
    double best = 1e300, second = 1e300;
    for (const Vec2& axis : axes) {
      const auto project = [&](const OrientedFootprint& f) {
        double lo = 1e300, hi = -1e300;
        for (const Vec2& c : f.corners()) {
          const double p = c.dot(axis);
          lo = std::min(lo, p);
          hi = std::max(hi, p);
        }
        return std::pair<double, double>{lo, hi};
      };
      const auto [alo, ahi] = project(fa);
      const auto [blo, bhi] = project(fb);
      const double overlap = std::min(ahi, bhi) - std::max(alo, blo);
      if (overlap < best) {
        second = best;
        best = overlap;
      } else {
        second = std::min(second, overlap);
      }
    }
    if (second - best < 1e-3) continue;

    ergo::PoseGrad ga, gb;
    ergo::penetration_depth_grad(fa, fb, ga, gb);
    const double analytic[6] = {ga.x, ga.y, ga.yaw, gb.x, gb.y, gb.yaw};
    for (std::size_t i = 0; i < 6; ++i) {
      const double fd = oracle::central_difference(depth, x, i, 1e-6);
      EXPECT_NEAR(analytic[i], fd, 1e-5)
          << "trial " << trial << " component " << i;
    }
    ++checked;
  }
  EXPECT_GE(checked, 50);
}

TEST(IntersectionArea, MatchesAxisAlignedFormula) {
  const OrientedFootprint a = box(0.0, 0.0, 0.0, 0.5, 0.5);
  const OrientedFootprint b = box(0.6, 0.3, 0.0, 0.5, 0.5);
  EXPECT_NEAR(ergo::intersection_area(a, b), 0.4 * 0.7, 1e-12);
  EXPECT_DOUBLE_EQ(ergo::intersection_area(a, box(3.0, 0.0, 0.0, 0.5, 0.5)), 0.0);
}

TEST(IntersectionArea, RotatedCaseMatchesMonteCarlo) {
  const OrientedFootprint a = box(0.0, 0.0, 0.35, 0.6, 0.4);
  const OrientedFootprint b = box(0.4, -0.2, 2.1, 0.5, 0.3);
  const double exact = ergo::intersection_area(a, b);
  ergo::Rng rng(1234);
  const int n = 400000;
  int inside = 0;
  for (int i = 0; i < n; ++i) {
    const Vec2 p{rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)};
    if (ergo::footprint_contains_point(a, p) && ergo::footprint_contains_point(b, p)) {
      ++inside;
    }
  }
  const double mc = 2.4 * 2.4 * static_cast<double>(inside) / n;
  EXPECT_NEAR(exact, mc, 0.01);
}

TEST(OverlapRatio, FullContainmentIsOne) {
  const OrientedFootprint small = box(0.0, 0.0, 0.5, 0.2, 0.1);
  const OrientedFootprint big = box(0.0, 0.0, 0.0, 1.0, 1.0);
  EXPECT_NEAR(ergo::overlap_ratio(small, big), 1.0, 1e-12);
  EXPECT_NEAR(ergo::overlap_ratio(big, small), 1.0, 1e-12);
}

TEST(WallDistance, KnownValues) {
  const Room room{4.0, 3.0, 2.7};
  const OrientedFootprint f = box(1.0, 1.2, 0.0, 0.25, 0.25);
  EXPECT_NEAR(ergo::wall_distance(f, room, 0), 0.95, 1e-12);  // south
  EXPECT_NEAR(ergo::wall_distance(f, room, 1), 2.75, 1e-12);  // east
  EXPECT_NEAR(ergo::wall_distance(f, room, 2), 1.55, 1e-12);  // north
  EXPECT_NEAR(ergo::wall_distance(f, room, 3), 0.75, 1e-12);  // west
}

TEST(WallDistanceGrad, MatchesCentralDifferences) {
  const Room room{5.0, 5.0, 2.7};
  ergo::Rng rng(21);
  int checked = 0;
  for (int trial = 0; trial < 300 && checked < 80; ++trial) {
    const double hw = rng.uniform(0.2, 0.6);
    const double hd = rng.uniform(0.2, 0.6);
    const int wall = static_cast<int>(rng.uniform_index(4));
    std::vector<double> x = {rng.uniform(1.0, 4.0), rng.uniform(1.0, 4.0),
                             rng.uniform(0, 6.28)};
    const auto dist = [&](const std::vector<double>& v) {
      return ergo::wall_distance(box(v[0], v[1], v[2], hw, hd), room, wall);
    };
    // Corner switches make the yaw derivative one-sided; sample away from
    // the switch by requiring the two nearest corners to differ.
    const OrientedFootprint f = box(x[0], x[1], x[2], hw, hd);
    std::vector<double> ds;
    for (const Vec2& c : f.corners()) {
      switch (wall) {
        case 0: ds.push_back(c.y); break;
        case 1: ds.push_back(room.width - c.x); break;
        case 2: ds.push_back(room.depth - c.y); break;
        default: ds.push_back(c.x); break;
      }
    }
    std::sort(ds.begin(), ds.end());
    if (ds[1] - ds[0] < 1e-3) continue;

    ergo::PoseGrad g;
    ergo::wall_distance_grad(f, room, wall, g);
    const double analytic[3] = {g.x, g.y, g.yaw};
    for (std::size_t i = 0; i < 3; ++i) {
      const double fd = oracle::central_difference(dist, x, i, 1e-6);
      EXPECT_NEAR(analytic[i], fd, 1e-5) << "wall " << wall << " component " << i;
    }
    ++checked;
  }
  EXPECT_GE(checked, 40);
}

TEST(FootprintPointDistance, InsideIsZeroOutsideMatchesBrute) {
  const OrientedFootprint f = box(1.0, 1.0, 0.6, 0.5, 0.3);
  EXPECT_DOUBLE_EQ(ergo::footprint_point_distance(f, f.center), 0.0);
  ergo::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p{rng.uniform(-1.0, 3.0), rng.uniform(-1.0, 3.0)};
    // Brute force: dense sampling along the rectangle edges.
    double brute = 1e300;
    for (int e = 0; e < 4; ++e) {
      const auto cs = f.corners();
      const Vec2& a = cs[e];
      const Vec2& b = cs[(e + 1) % 4];
      for (int k = 0; k <= 2000; ++k) {
        const double t = k / 2000.0;
        const Vec2 q{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
        brute = std::min(brute, (p - q).norm());
      }
    }
    if (ergo::footprint_contains_point(f, p)) brute = 0.0;
    EXPECT_NEAR(ergo::footprint_point_distance(f, p), brute, 1e-5);
  }
}

TEST(FootprintPairDistance, PenetratingIsZeroSeparatedMatchesBrute) {
  ergo::Rng rng(31);
  for (int i = 0; i < 60; ++i) {
    const OrientedFootprint a = box(rng.uniform(0, 3), rng.uniform(0, 3),
                                    rng.uniform(0, 6.28), rng.uniform(0.1, 0.6),
                                    rng.uniform(0.1, 0.6));
    const OrientedFootprint b = box(rng.uniform(0, 3), rng.uniform(0, 3),
                                    rng.uniform(0, 6.28), rng.uniform(0.1, 0.6),
                                    rng.uniform(0.1, 0.6));
    const double d = ergo::footprint_pair_distance(a, b);
    if (ergo::penetration_depth(a, b) > 0.0) {
      EXPECT_DOUBLE_EQ(d, 0.0);
      continue;
    }
    // The minimum for disjoint rectangles is attained at a corner of one
    // against the other, so sampling both edge sets (corners included at the
    // endpoints) recovers it exactly.
    double brute = 1e300;
    const auto sweep = [&](const OrientedFootprint& from, const OrientedFootprint& to) {
      const auto cs = from.corners();
      for (int e = 0; e < 4; ++e) {
        const Vec2& p0 = cs[e];
        const Vec2& p1 = cs[(e + 1) % 4];
        for (int k = 0; k <= 400; ++k) {
          const double t = k / 400.0;
          const Vec2 p{p0.x + t * (p1.x - p0.x), p0.y + t * (p1.y - p0.y)};
          brute = std::min(brute, ergo::footprint_point_distance(to, p));
        }
      }
    };
    sweep(a, b);
    sweep(b, a);
    EXPECT_NEAR(d, brute, 1e-9);
  }
}

TEST(Aabb, BoundsRotatedFootprint) {
  const OrientedFootprint f = box(2.0, 1.0, ergo::kPi / 4.0, 1.0, 1.0);
  const ergo::Bounds2 b = ergo::aabb_of(f);
  const double half_diag = std::sqrt(2.0);
  EXPECT_NEAR(b.min.x, 2.0 - half_diag, 1e-12);
  EXPECT_NEAR(b.max.x, 2.0 + half_diag, 1e-12);
  EXPECT_NEAR(b.min.y, 1.0 - half_diag, 1e-12);
  EXPECT_NEAR(b.max.y, 1.0 + half_diag, 1e-12);
}

TEST(WallBackYaw, MatchesWallIndexing) {
  EXPECT_NEAR(ergo::wall_back_yaw(0), 0.0, 1e-15);
  EXPECT_NEAR(ergo::wall_back_yaw(1), ergo::kPi / 2.0, 1e-15);
  EXPECT_NEAR(ergo::wall_back_yaw(2), ergo::kPi, 1e-15);
  EXPECT_NEAR(ergo::wall_back_yaw(3), 3.0 * ergo::kPi / 2.0, 1e-15);
}

TEST(Rng, DeterministicAndInRange) {
  ergo::Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_DOUBLE_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_DOUBLE_EQ(ergo::Rng(1).uniform(3.0, 2.0), 3.0);  // degenerate range
}

}  // namespace
