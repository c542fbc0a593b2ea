#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "ergo/metrics.hpp"
#include "oracles.hpp"

namespace {

using ergo::AssetPlacement;
using ergo::BodyDims;
using ergo::EngineConfig;
using ergo::HeatmapGrid;
using ergo::ManipulationBox;
using ergo::Pose;
using ergo::Room;
using ergo::SceneLayout;
using ergo::TrajectoryEpisode;
using ergo::TrajectorySample;
using ergo::Vec2;
using ergo::Vec3;

AssetPlacement placed(const std::string& id, double x, double y, double yaw,
                      double half_w, double half_d) {
  AssetPlacement a;
  a.id = id;
  a.category = "box";
  a.pose = Pose{x, y, yaw, 0.0};
  a.half_width = half_w;
  a.half_depth = half_d;
  a.height = 1.0;
  return a;
}

SceneLayout layout_with(const Room& room, std::vector<AssetPlacement> assets) {
  SceneLayout l;
  l.room = room;
  l.assets = std::move(assets);
  return l;
}

TrajectoryEpisode episode(const std::string& who, double fps,
                          std::vector<std::pair<double, Vec3>> stamped,
                          std::optional<BodyDims> body = std::nullopt) {
  TrajectoryEpisode e;
  e.participant = who;
  e.fps = fps;
  for (const auto& [t, p] : stamped) e.samples.push_back({t, p});
  e.body = body;
  return e;
}

// ---------------------------------------------------------------------------
// Collision-free and in-boundary scores
// ---------------------------------------------------------------------------

TEST(CollisionFree, SmallScenesAndExactContact) {
  const Room room{10.0, 10.0, 2.7};
  EXPECT_EQ(ergo::collision_free_score(layout_with(room, {})), 1.0);
  EXPECT_EQ(ergo::collision_free_score(
                layout_with(room, {placed("solo", 5, 5, 0, 0.5, 0.5)})),
            1.0);

  // Bounding radii are exactly 0.5 each (3-4-5 halves); centers one meter
  // apart touch exactly, and exact contact counts as a collision.
  const AssetPlacement a = placed("a", 2.0, 2.0, 0.0, 0.3, 0.4);
  const AssetPlacement b = placed("b", 3.0, 2.0, 1.0, 0.3, 0.4);
  EXPECT_EQ(ergo::collision_free_score(layout_with(room, {a, b})), 0.0);

  // Nudge apart: strictly separated.
  const AssetPlacement b2 = placed("b", 3.0 + 1e-9, 2.0, 1.0, 0.3, 0.4);
  EXPECT_EQ(ergo::collision_free_score(layout_with(room, {a, b2})), 1.0);

  // Three assets, one colliding pair out of three.
  const AssetPlacement c = placed("c", 8.0, 8.0, 0.0, 0.3, 0.4);
  EXPECT_DOUBLE_EQ(ergo::collision_free_score(layout_with(room, {a, b, c})),
                   2.0 / 3.0);
}

TEST(InBoundary, FlushCountsInsideRotationCanLeave) {
  const Room room{4.0, 4.0, 2.7};
  // Axis-aligned box flush against the west wall: inclusive, inside.
  const AssetPlacement flush = placed("flush", 0.5, 2.0, 0.0, 0.5, 0.4);
  EXPECT_EQ(ergo::in_boundary_score(layout_with(room, {flush})), 1.0);
  // The same box rotated 45 degrees grows its bound past the wall.
  const AssetPlacement tilted = placed("tilted", 0.5, 2.0, ergo::kPi / 4.0, 0.5, 0.4);
  EXPECT_EQ(ergo::in_boundary_score(layout_with(room, {tilted})), 0.0);
  EXPECT_DOUBLE_EQ(ergo::in_boundary_score(layout_with(room, {flush, tilted})), 0.5);
  EXPECT_EQ(ergo::in_boundary_score(layout_with(room, {})), 1.0);
}

TEST(Scores, AgreeExactlyWithBruteForceOnRandomScenes) {
  ergo::Rng rng(2024);
  for (int scene = 0; scene < 300; ++scene) {
    const Room room{2.0 + rng.uniform(0.0, 6.0), 2.0 + rng.uniform(0.0, 6.0), 2.7};
    const std::size_t n = 2 + rng.uniform_index(14);
    std::vector<AssetPlacement> assets;
    for (std::size_t i = 0; i < n; ++i) {
      assets.push_back(placed("a" + std::to_string(i),
                              rng.uniform(-1.0, room.width + 1.0),
                              rng.uniform(-1.0, room.depth + 1.0),
                              rng.uniform(0.0, ergo::kTwoPi),
                              rng.uniform(0.05, 0.75), rng.uniform(0.05, 0.75)));
    }
    const SceneLayout layout = layout_with(room, std::move(assets));
    EXPECT_EQ(ergo::collision_free_score(layout), oracle::collision_free_brute(layout))
        << "scene " << scene;
    EXPECT_EQ(ergo::in_boundary_score(layout),
              oracle::in_boundary_brute(layout, room))
        << "scene " << scene;
  }
}

// ---------------------------------------------------------------------------
// Volumetric occupancy
// ---------------------------------------------------------------------------

TEST(Occupancy, FullCoverageIsExactlyOne) {
  // A stationary body far wider and taller than the box swallows every
  // voxel center.
  const ManipulationBox box{{1.0, 1.0, 0.0}, {1.4, 1.5, 1.2}, false};
  const TrajectoryEpisode e =
      episode("p1", 30.0, {{0.0, {1.2, 1.25, 0.0}}},
              BodyDims{3.0, 3.0, 2.0});
  EXPECT_EQ(ergo::volumetric_occupancy_ratio(e, box, 0.05), 1.0);
}

TEST(Occupancy, DisjointBodyIsExactlyZero) {
  const ManipulationBox box{{1.0, 1.0, 0.0}, {1.4, 1.5, 1.2}, false};
  const TrajectoryEpisode e =
      episode("p1", 30.0, {{0.0, {8.0, 8.0, 0.0}}, {0.5, {8.3, 8.0, 0.0}}},
              BodyDims{0.5, 0.3, 1.7});
  EXPECT_EQ(ergo::volumetric_occupancy_ratio(e, box, 0.05), 0.0);
}

TEST(Occupancy, RejectsBadInputs) {
  const ManipulationBox box{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, false};
  const TrajectoryEpisode ok =
      episode("p1", 30.0, {{0.0, {0.5, 0.5, 0.0}}}, BodyDims{0.5, 0.3, 1.7});
  EXPECT_THROW(ergo::volumetric_occupancy_ratio(ok, box, 0.0), ergo::EvalError);
  EXPECT_THROW(ergo::volumetric_occupancy_ratio(ok, box, -0.1), ergo::EvalError);

  TrajectoryEpisode no_body = ok;
  no_body.body.reset();
  EXPECT_THROW(ergo::volumetric_occupancy_ratio(no_body, box, 0.05), ergo::EvalError);

  TrajectoryEpisode bad_time =
      episode("p1", 30.0, {{0.5, {0.5, 0.5, 0.0}}, {0.5, {0.6, 0.5, 0.0}}},
              BodyDims{0.5, 0.3, 1.7});
  EXPECT_THROW(ergo::volumetric_occupancy_ratio(bad_time, box, 0.05),
               ergo::SchemaError);
  // An empty episode swept nothing; that is a value, not an error.
  TrajectoryEpisode empty = ok;
  empty.samples.clear();
  EXPECT_EQ(ergo::volumetric_occupancy_ratio(empty, box, 0.05), 0.0);
}

TEST(Occupancy, StatureCapsTheSweptHeight) {
  // Body covers the full footprint but only stands 1.0 m tall in a 2.0 m
  // box: exactly the lower half of the voxel layers are swept.
  const ManipulationBox box{{0.0, 0.0, 0.0}, {0.4, 0.4, 2.0}, false};
  const TrajectoryEpisode e =
      episode("p1", 30.0, {{0.0, {0.2, 0.2, 0.0}}}, BodyDims{2.0, 2.0, 1.0});
  EXPECT_DOUBLE_EQ(ergo::volumetric_occupancy_ratio(e, box, 0.05), 0.5);
}

TEST(Occupancy, CoarseVoxelTracksFineBruteForceWithinTolerance) {
  const ManipulationBox box{{0.6, 0.4, 0.0}, {1.8, 1.3, 1.9}, false};
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    ergo::Rng rng(seed);
    TrajectoryEpisode e;
    e.participant = "walker" + std::to_string(seed);
    e.fps = 30.0;
    e.body = BodyDims{0.4 + rng.uniform(0.0, 0.3), 0.25 + rng.uniform(0.0, 0.15),
                      1.5 + rng.uniform(0.0, 0.4)};
    double x = rng.uniform(0.4, 2.0);
    double y = rng.uniform(0.2, 1.5);
    const std::size_t steps = 8 + rng.uniform_index(10);
    for (std::size_t i = 0; i < steps; ++i) {
      e.samples.push_back({static_cast<double>(i) / e.fps, {x, y, 0.0}});
      x += rng.uniform(-0.2, 0.2);
      y += rng.uniform(-0.2, 0.2);
    }
    const double coarse = ergo::volumetric_occupancy_ratio(e, box, 0.05);
    const double fine = oracle::occupancy_brute(e, box, 0.0125);
    EXPECT_NEAR(coarse, fine, 0.02) << "seed " << seed;
  }
}

// ---------------------------------------------------------------------------
// Detour signatures
// ---------------------------------------------------------------------------

TEST(Detour, SidesAndArcLengthOrdering) {
  const Room room{10.0, 10.0, 2.7};
  const SceneLayout layout = layout_with(
      room, {
                placed("right_box", 7.0, 3.8, 0.0, 0.25, 0.25),  // passed later
                placed("left_box", 3.0, 5.0, 0.0, 0.25, 0.25),   // passed first
                placed("far_box", 5.0, 8.5, 0.0, 0.25, 0.25),    // out of reach
            });
  // Straight west-to-east walk along y = 4.55: left_box edge is 0.2 away on
  // the left, right_box edge 0.5 away on the right, far_box 3.7 away.
  const TrajectoryEpisode e = episode(
      "p1", 30.0, {{0.0, {1.0, 4.55, 0.0}}, {8.0, {9.0, 4.55, 0.0}}});
  const ergo::DetourSignature sig = ergo::detour_signature(e, layout, 0.5);
  ASSERT_EQ(sig.size(), 2u);
  EXPECT_EQ(sig[0].first, "left_box");
  EXPECT_EQ(sig[0].second, 1);
  EXPECT_EQ(sig[1].first, "right_box");
  EXPECT_EQ(sig[1].second, -1);
}

TEST(Detour, SignatureInvariantUnderResampling) {
  const Room room{10.0, 10.0, 2.7};
  const SceneLayout layout = layout_with(
      room, {placed("mid", 5.0, 5.3, 0.3, 0.3, 0.2),
             placed("late", 8.0, 4.6, 0.0, 0.2, 0.2)});
  const Vec3 start{1.0, 4.9, 0.0};
  const Vec3 end{9.5, 4.9, 0.0};

  const TrajectoryEpisode sparse =
      episode("a", 30.0, {{0.0, start}, {4.0, end}});
  std::vector<std::pair<double, Vec3>> dense_samples;
  for (int i = 0; i <= 50; ++i) {
    const double u = i / 50.0;
    dense_samples.push_back(
        {u * 11.7, {start.x + u * (end.x - start.x), start.y, 0.0}});
  }
  const TrajectoryEpisode dense = episode("b", 12.0, dense_samples);

  const ergo::DetourSignature s1 = ergo::detour_signature(sparse, layout);
  const ergo::DetourSignature s2 = ergo::detour_signature(dense, layout);
  EXPECT_EQ(s1, s2);
  ASSERT_EQ(s1.size(), 2u);
  EXPECT_EQ(s1[0].first, "mid");
  EXPECT_EQ(s1[1].first, "late");
}

TEST(Detour, BodyBreadthInflatesTheCaptureRadius) {
  const Room room{10.0, 10.0, 2.7};
  const SceneLayout layout =
      layout_with(room, {placed("shelf", 5.0, 5.87, 0.0, 0.3, 0.25)});
  // Path passes 0.62 m from the shelf edge: outside the bare 0.5 m
  // proximity, inside once half the 0.4 m body breadth is added.
  const std::vector<std::pair<double, Vec3>> path = {{0.0, {1.0, 5.0, 0.0}},
                                                     {6.0, {9.0, 5.0, 0.0}}};
  const TrajectoryEpisode bare = episode("a", 30.0, path);
  const TrajectoryEpisode bodied =
      episode("b", 30.0, path, BodyDims{0.4, 0.3, 1.7});
  EXPECT_TRUE(ergo::detour_signature(bare, layout).empty());
  const ergo::DetourSignature sig = ergo::detour_signature(bodied, layout);
  ASSERT_EQ(sig.size(), 1u);
  EXPECT_EQ(sig[0].first, "shelf");
}

TEST(Detour, DistinctTrajectoryCount) {
  const Room room{10.0, 10.0, 2.7};
  const SceneLayout layout =
      layout_with(room, {placed("pillar", 5.0, 5.0, 0.0, 0.3, 0.3)});
  const TrajectoryEpisode below_a =
      episode("a", 30.0, {{0.0, {1.0, 4.6, 0.0}}, {5.0, {9.0, 4.6, 0.0}}});
  const TrajectoryEpisode below_b =
      episode("b", 30.0, {{0.0, {1.0, 4.55, 0.0}}, {6.0, {9.0, 4.55, 0.0}}});
  const TrajectoryEpisode above =
      episode("c", 30.0, {{0.0, {1.0, 5.4, 0.0}}, {5.0, {9.0, 5.4, 0.0}}});
  EXPECT_EQ(ergo::count_distinct_trajectories({below_a, below_b, above}, layout), 2);
  EXPECT_EQ(ergo::count_distinct_trajectories({below_a, below_b}, layout), 1);
  EXPECT_THROW(ergo::count_distinct_trajectories({}, layout), ergo::EvalError);
}

// ---------------------------------------------------------------------------
// Mean-speed heatmap
// ---------------------------------------------------------------------------

TEST(Heatmap, StraightLineUnitSpeedGivesExactlyOneInVisitedCells) {
  const Room room{5.0, 5.0, 2.7};
  // Dyadic sample spacing: 0.25 m steps at 4 fps give speed exactly 1.0.
  std::vector<std::pair<double, Vec3>> samples;
  for (int i = 0; i <= 14; ++i) {
    samples.push_back({i * 0.25, {0.5 + i * 0.25, 2.5, 0.0}});
  }
  const TrajectoryEpisode e = episode("p1", 4.0, samples);
  const EngineConfig config;  // full 1024 x 1024 grid
  const HeatmapGrid grid = ergo::mean_speed_heatmap({e}, room, config);
  EXPECT_EQ(grid.cols, 1024);
  EXPECT_EQ(grid.rows, 1024);
  std::size_t visited = 0;
  for (std::size_t c = 0; c < grid.mean.size(); ++c) {
    if (!grid.visited[c]) continue;
    ++visited;
    EXPECT_NEAR(grid.mean[c], 1.0, 1e-6);
  }
  // One distinct starting cell per segment: steps are far larger than cells.
  EXPECT_EQ(visited, 14u);
}

TEST(Heatmap, TwoParticipantsTimeWeightedAverageIsExactlyOnePointFive) {
  const Room room{4.0, 4.0, 2.7};
  const TrajectoryEpisode slow = episode(
      "slow", 4.0, {{0.0, {1.0, 1.0, 0.0}}, {0.25, {1.25, 1.0, 0.0}}});
  const TrajectoryEpisode fast = episode(
      "fast", 4.0, {{0.0, {1.0, 1.0, 0.0}}, {0.25, {1.5, 1.0, 0.0}}});
  const HeatmapGrid grid = ergo::mean_speed_heatmap({slow, fast}, room);
  const long cell = grid.cell_of({1.0, 1.0}, room);
  ASSERT_GE(cell, 0);
  EXPECT_TRUE(grid.visited[static_cast<std::size_t>(cell)]);
  EXPECT_EQ(grid.mean[static_cast<std::size_t>(cell)], 1.5);
  EXPECT_EQ(grid.dwell_seconds[static_cast<std::size_t>(cell)], 0.5);
}

TEST(Heatmap, RejectsMixedFpsAndTooShortEpisodes) {
  const Room room{4.0, 4.0, 2.7};
  const TrajectoryEpisode a = episode(
      "a", 30.0, {{0.0, {1.0, 1.0, 0.0}}, {0.1, {1.2, 1.0, 0.0}}});
  TrajectoryEpisode b = episode(
      "b", 25.0, {{0.0, {2.0, 2.0, 0.0}}, {0.1, {2.2, 2.0, 0.0}}});
  EXPECT_THROW(ergo::mean_speed_heatmap({a, b}, room), ergo::EvalError);
  const TrajectoryEpisode single = episode("s", 30.0, {{0.0, {1.0, 1.0, 0.0}}});
  EXPECT_THROW(ergo::mean_speed_heatmap({single}, room), ergo::EvalError);
}

TEST(Heatmap, SegmentsStartingOutsideTheRoomAreSkipped) {
  const Room room{4.0, 4.0, 2.7};
  const TrajectoryEpisode e = episode(
      "p", 4.0, {{0.0, {-0.5, 2.0, 0.0}}, {0.25, {0.125, 2.0, 0.0}},
                 {0.5, {0.375, 2.0, 0.0}}});
  const HeatmapGrid grid = ergo::mean_speed_heatmap({e}, room);
  std::size_t visited = 0;
  for (const std::uint8_t v : grid.visited) visited += v;
  // Only the second segment starts inside the room.
  EXPECT_EQ(visited, 1u);
  const long cell = grid.cell_of({0.125, 2.0}, room);
  ASSERT_GE(cell, 0);
  EXPECT_EQ(grid.mean[static_cast<std::size_t>(cell)], 1.0);
}

TEST(Heatmap, CellOfFoldsFarEdgesAndRejectsOutside) {
  const Room room{4.0, 4.0, 2.7};
  EngineConfig config;
  config.heatmap_resolution = 8;
  const TrajectoryEpisode e = episode(
      "p", 4.0, {{0.0, {1.0, 1.0, 0.0}}, {0.25, {1.25, 1.0, 0.0}}});
  const HeatmapGrid grid = ergo::mean_speed_heatmap({e}, room, config);
  EXPECT_EQ(grid.cell_of({0.0, 0.0}, room), 0);
  EXPECT_EQ(grid.cell_of({4.0, 4.0}, room), static_cast<long>(grid.index(7, 7)));
  EXPECT_EQ(grid.cell_of({4.0 + 1e-12, 2.0}, room), -1);
  EXPECT_EQ(grid.cell_of({2.0, -1e-12}, room), -1);
}

TEST(Heatmap, MaskedSmoothingPreservesUniformFieldsAndTheMask) {
  const Room room{4.0, 4.0, 2.7};
  EngineConfig config;
  config.heatmap_resolution = 32;
  config.heatmap_sigma_m = 0.5;
  // An L-shaped unit-speed walk visits a sparse set of cells.
  std::vector<std::pair<double, Vec3>> samples;
  for (int i = 0; i <= 8; ++i) samples.push_back({i * 0.25, {0.5 + i * 0.25, 0.5, 0.0}});
  for (int i = 1; i <= 8; ++i)
    samples.push_back({2.0 + i * 0.25, {2.5, 0.5 + i * 0.25, 0.0}});
  const TrajectoryEpisode e = episode("p", 4.0, samples);
  const HeatmapGrid grid = ergo::mean_speed_heatmap({e}, room, config);
  const HeatmapGrid smooth = ergo::smoothed(grid);
  EXPECT_FALSE(grid.smoothed);
  EXPECT_TRUE(smooth.smoothed);
  ASSERT_EQ(smooth.visited, grid.visited);
  for (std::size_t c = 0; c < grid.mean.size(); ++c) {
    if (grid.visited[c]) {
      EXPECT_DOUBLE_EQ(grid.mean[c], 1.0);
      EXPECT_DOUBLE_EQ(smooth.mean[c], 1.0);
    } else {
      EXPECT_EQ(smooth.mean[c], 0.0);
    }
  }
}

TEST(Episode, ValidateRejectsBadFpsAndTimestamps) {
  TrajectoryEpisode e = episode("p", 0.0, {{0.0, {1.0, 1.0, 0.0}}});
  EXPECT_THROW(e.validate(), ergo::SchemaError);
  e.fps = 30.0;
  EXPECT_NO_THROW(e.validate());
  e.samples.push_back({0.0, {1.1, 1.0, 0.0}});
  EXPECT_THROW(e.validate(), ergo::SchemaError);
}

}  // namespace
