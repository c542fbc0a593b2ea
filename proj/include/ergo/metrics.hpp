#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ergo/anthropometry.hpp"
#include "ergo/config.hpp"
#include "ergo/geometry.hpp"
#include "ergo/layout.hpp"

namespace ergo {

// ---------------------------------------------------------------------------
// Geometric scores
// ---------------------------------------------------------------------------

/// Fraction of unordered asset pairs whose bounding circles are strictly
/// separated (d > r_i + r_j; an exactly touching pair counts as colliding).
/// Defined as 1.0 for scenes with fewer than two assets.
inline double collision_free_score(const SceneLayout& layout) {
  const std::size_t n = layout.assets.size();
  if (n < 2) return 1.0;
  std::size_t pairs = 0;
  std::size_t free_pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ++pairs;
      const AssetPlacement& a = layout.assets[i];
      const AssetPlacement& b = layout.assets[j];
      const double ri = bounding_circle_radius(a.half_width, a.half_depth);
      const double rj = bounding_circle_radius(b.half_width, b.half_depth);
      const Vec2 d = b.pose.position() - a.pose.position();
      if (d.squared_norm() > (ri + rj) * (ri + rj)) ++free_pairs;
    }
  }
  return static_cast<double>(free_pairs) / static_cast<double>(pairs);
}

/// Fraction of assets whose footprint bounds lie inside the room. The bound
/// check is inclusive: an asset flush against a wall counts as inside.
/// Defined as 1.0 for an empty scene.
inline double in_boundary_score(const SceneLayout& layout) {
  if (layout.assets.empty()) return 1.0;
  std::size_t inside = 0;
  for (const AssetPlacement& a : layout.assets) {
    const Bounds2 b = aabb_of(a.footprint());
    if (b.min.x >= 0.0 && b.max.x <= layout.room.width && b.min.y >= 0.0 &&
        b.max.y <= layout.room.depth) {
      ++inside;
    }
  }
  return static_cast<double>(inside) / static_cast<double>(layout.assets.size());
}

// ---------------------------------------------------------------------------
// Trajectory episodes
// ---------------------------------------------------------------------------

struct BodyDims {
  double breadth = 0.0;
  double depth = 0.0;
  double stature = 0.0;
};

struct TrajectorySample {
  double t = 0.0;  // seconds
  Vec3 position;   // meters; z optional input defaults to 0
};

struct TrajectoryEpisode {
  std::string participant;
  double fps = 0.0;
  std::vector<TrajectorySample> samples;
  std::optional<BodyDims> body;

  void validate() const {
    if (!(fps > 0.0)) {
      throw SchemaError("episode '" + participant + "': fps must be positive");
    }
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (!(samples[i].t > samples[i - 1].t)) {
        throw SchemaError("episode '" + participant +
                          "': timestamps must be strictly increasing");
      }
    }
  }
};

namespace detail {

// Yaw whose front direction matches the travel heading h:
// front_direction(yaw) = (-sin yaw, cos yaw) = h.
inline double yaw_from_heading(const Vec2& h) { return std::atan2(-h.x, h.y); }

/// Per-frame yaw from motion direction. Zero-length steps inherit the
/// previous heading; a fully stationary episode faces +Y.
inline std::vector<double> frame_yaws(const TrajectoryEpisode& episode) {
  const std::size_t n = episode.samples.size();
  std::vector<double> yaws(n, 0.0);
  Vec2 heading{0.0, 1.0};
  bool seen = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 < n) {
      const Vec2 step = {episode.samples[i + 1].position.x - episode.samples[i].position.x,
                         episode.samples[i + 1].position.y - episode.samples[i].position.y};
      const double len = step.norm();
      if (len > 1e-12) {
        heading = step / len;
        seen = true;
      }
    }
    yaws[i] = yaw_from_heading(heading);
  }
  if (seen) {
    // Frames before the first movement face the first real heading.
    double first = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const Vec2 step = {episode.samples[i + 1].position.x - episode.samples[i].position.x,
                         episode.samples[i + 1].position.y - episode.samples[i].position.y};
      if (step.norm() > 1e-12) {
        first = yaw_from_heading(step / step.norm());
        break;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 step = i + 1 < n
                            ? Vec2{episode.samples[i + 1].position.x -
                                       episode.samples[i].position.x,
                                   episode.samples[i + 1].position.y -
                                       episode.samples[i].position.y}
                            : Vec2{0.0, 0.0};
      if (step.norm() > 1e-12) break;
      yaws[i] = first;
    }
  }
  return yaws;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Volumetric occupancy
// ---------------------------------------------------------------------------

/// Fraction of the manipulation box swept by the accumulated body volume of
/// the episode: Vol(M ∩ B) / Vol(B), with M the union over frames of an
/// oriented body box (breadth × depth footprint, stature tall, standing on
/// the floor) centered at each sample and facing the travel direction.
/// Evaluated by testing voxel centers of B on a uniform grid with cell size
/// at most `voxel` per axis.
inline double volumetric_occupancy_ratio(const TrajectoryEpisode& episode,
                                         const ManipulationBox& box, double voxel) {
  if (!(voxel > 0.0)) throw EvalError("voxel size must be positive");
  if (episode.samples.empty()) return 0.0;
  if (!episode.body) {
    throw EvalError("episode '" + episode.participant + "' lacks body box dimensions");
  }
  episode.validate();
  const BodyDims& body = *episode.body;

  const std::vector<double> yaws = detail::frame_yaws(episode);
  std::vector<OrientedFootprint> frames;
  frames.reserve(episode.samples.size());
  for (std::size_t i = 0; i < episode.samples.size(); ++i) {
    const Vec3& p = episode.samples[i].position;
    frames.push_back(OrientedFootprint{{p.x, p.y}, body.breadth / 2.0,
                                       body.depth / 2.0, yaws[i]});
  }

  const auto axis_cells = [&](double lo, double hi) {
    const double extent = std::max(0.0, hi - lo);
    return std::max<std::size_t>(1, static_cast<std::size_t>(
                                        std::ceil(extent / voxel - 1e-9)));
  };
  const std::size_t nx = axis_cells(box.min.x, box.max.x);
  const std::size_t ny = axis_cells(box.min.y, box.max.y);
  const std::size_t nz = axis_cells(box.min.z, box.max.z);
  const double sx = (box.max.x - box.min.x) / static_cast<double>(nx);
  const double sy = (box.max.y - box.min.y) / static_cast<double>(ny);
  const double sz = (box.max.z - box.min.z) / static_cast<double>(nz);

  // The body volume is z-invariant over [0, stature], so resolve the planar
  // union once per column and multiply by the count of covered z layers.
  std::size_t covered_layers = 0;
  for (std::size_t k = 0; k < nz; ++k) {
    const double z = box.min.z + (static_cast<double>(k) + 0.5) * sz;
    if (z >= 0.0 && z <= body.stature) ++covered_layers;
  }

  std::size_t hit = 0;
  for (std::size_t i = 0; i < nx; ++i) {
    const double x = box.min.x + (static_cast<double>(i) + 0.5) * sx;
    for (std::size_t j = 0; j < ny; ++j) {
      const Vec2 p{x, box.min.y + (static_cast<double>(j) + 0.5) * sy};
      for (const OrientedFootprint& fp : frames) {
        if (footprint_contains_point(fp, p)) {
          hit += covered_layers;
          break;
        }
      }
    }
  }
  return static_cast<double>(hit) / static_cast<double>(nx * ny * nz);
}

// ---------------------------------------------------------------------------
// Distinct-trajectory counting
// ---------------------------------------------------------------------------

/// One detour event: the path approached `obstacle` and passed it on `side`
/// (+1 = obstacle on the traveler's left, -1 = right).
struct DetourEvent {
  double arc_length = 0.0;
  std::string obstacle;
  int side = 0;
};

using DetourSignature = std::vector<std::pair<std::string, int>>;

/// Reduces one episode to its detour signature: the arc-length-ordered
/// sequence of (obstacle, side) for every obstacle whose footprint,
/// inflated by half the body breadth, the path passes within
/// `proximity` meters of. Side is the sign of the cross product between
/// the travel direction and the vector to the obstacle center at closest
/// approach (ties resolve to right). Arc-length ordering makes the
/// signature invariant under time reparameterizations preserving the path.
inline DetourSignature detour_signature(const TrajectoryEpisode& episode,
                                        const SceneLayout& layout,
                                        double proximity = 0.5) {
  episode.validate();
  const double inflation = episode.body ? episode.body->breadth / 2.0 : 0.0;

  std::vector<Vec2> pts;
  pts.reserve(episode.samples.size());
  for (const TrajectorySample& s : episode.samples) {
    pts.push_back({s.position.x, s.position.y});
  }
  if (pts.empty()) return {};

  std::vector<double> arc(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    arc[i] = arc[i - 1] + (pts[i] - pts[i - 1]).norm();
  }

  std::vector<DetourEvent> events;
  for (const AssetPlacement& asset : layout.assets) {
    const OrientedFootprint fp = asset.footprint();
    double best_dist = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    Vec2 best_point = pts.front();
    Vec2 best_dir{0.0, 1.0};

    const auto consider = [&](double dist, double s, const Vec2& p, const Vec2& dir) {
      // Strict improvement keeps the earliest point along the path on ties.
      if (dist < best_dist - 1e-12) {
        best_dist = dist;
        best_s = s;
        best_point = p;
        best_dir = dir;
      }
    };

    if (pts.size() == 1) {
      consider(footprint_point_distance(fp, pts[0]), 0.0, pts[0], {0.0, 1.0});
    }
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const Vec2 a = pts[i];
      const Vec2 b = pts[i + 1];
      const Vec2 seg = b - a;
      const double seg_len = seg.norm();
      const Vec2 dir = seg_len > 1e-12 ? seg / seg_len : best_dir;
      // Distance to a convex set is convex along the segment, so a ternary
      // search over the parameter finds the closest approach.
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 64; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        const double d1 = footprint_point_distance(fp, a + seg * m1);
        const double d2 = footprint_point_distance(fp, a + seg * m2);
        if (d1 <= d2) {
          hi = m2;
        } else {
          lo = m1;
        }
      }
      const double tm = (lo + hi) / 2.0;
      for (double t : {0.0, tm, 1.0}) {
        const Vec2 p = a + seg * t;
        consider(footprint_point_distance(fp, p), arc[i] + seg_len * t, p, dir);
      }
    }

    if (best_dist <= inflation + proximity) {
      const Vec2 to_center = fp.center - best_point;
      const int side = best_dir.cross(to_center) > 0.0 ? 1 : -1;
      events.push_back({best_s, asset.id, side});
    }
  }

  std::sort(events.begin(), events.end(), [](const DetourEvent& a, const DetourEvent& b) {
    if (a.arc_length != b.arc_length) return a.arc_length < b.arc_length;
    return a.obstacle < b.obstacle;
  });
  DetourSignature sig;
  sig.reserve(events.size());
  for (const DetourEvent& e : events) sig.emplace_back(e.obstacle, e.side);
  return sig;
}

/// Number of unique detour signatures across the episodes of one task.
inline int count_distinct_trajectories(const std::vector<TrajectoryEpisode>& episodes,
                                       const SceneLayout& layout,
                                       double proximity = 0.5) {
  if (episodes.empty()) {
    throw EvalError("distinct-trajectory count requires at least one episode");
  }
  std::set<DetourSignature> unique;
  for (const TrajectoryEpisode& e : episodes) {
    unique.insert(detour_signature(e, layout, proximity));
  }
  return static_cast<int>(unique.size());
}

// ---------------------------------------------------------------------------
// Mean-speed heatmap
// ---------------------------------------------------------------------------

/// Fixed-resolution grid of time-weighted mean speeds over the room.
/// Cells never entered are flagged rather than treated as zero speed.
struct HeatmapGrid {
  int cols = 1024;
  int rows = 1024;
  double cell_w = 0.0;  // meters per cell, x axis
  double cell_h = 0.0;  // meters per cell, y axis
  double sigma_m = 0.0;
  bool smoothed = false;
  std::vector<double> mean;           // row-major; meaningful where visited
  std::vector<double> dwell_seconds;  // row-major
  std::vector<std::uint8_t> visited;  // row-major

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
           static_cast<std::size_t>(col);
  }

  /// Cell containing p, or -1 outside the room. The far edges fold into the
  /// last cell so on-boundary samples still count.
  long cell_of(const Vec2& p, const Room& room) const {
    if (p.x < 0.0 || p.x > room.width || p.y < 0.0 || p.y > room.depth) return -1;
    int col = static_cast<int>(std::floor(p.x / cell_w));
    int row = static_cast<int>(std::floor(p.y / cell_h));
    col = std::min(col, cols - 1);
    row = std::min(row, rows - 1);
    return static_cast<long>(index(row, col));
  }
};

/// Accumulates Σ v·Δt and Σ Δt per cell over all episodes (speed
/// v = step length · fps, attributed to the cell containing the segment's
/// starting sample) and returns the ratio as the per-cell mean speed.
/// Samples outside the room are skipped. All episodes must share one fps.
inline HeatmapGrid mean_speed_heatmap(const std::vector<TrajectoryEpisode>& episodes,
                                      const Room& room,
                                      const EngineConfig& config = {}) {
  HeatmapGrid grid;
  grid.cols = config.heatmap_resolution;
  grid.rows = config.heatmap_resolution;
  grid.cell_w = room.width / static_cast<double>(grid.cols);
  grid.cell_h = room.depth / static_cast<double>(grid.rows);
  grid.sigma_m = config.heatmap_sigma_m;
  const std::size_t cells = static_cast<std::size_t>(grid.cols) * grid.rows;
  grid.mean.assign(cells, 0.0);
  grid.dwell_seconds.assign(cells, 0.0);
  grid.visited.assign(cells, 0);

  double fps = 0.0;
  std::vector<double> weighted(cells, 0.0);
  for (const TrajectoryEpisode& episode : episodes) {
    episode.validate();
    if (episode.samples.size() < 2) {
      throw EvalError("episode '" + episode.participant +
                      "' needs at least two samples for speeds");
    }
    if (fps == 0.0) {
      fps = episode.fps;
    } else if (episode.fps != fps) {
      throw EvalError("fps mismatch across episodes: " + std::to_string(fps) +
                      " vs " + std::to_string(episode.fps));
    }
    for (std::size_t i = 0; i + 1 < episode.samples.size(); ++i) {
      const TrajectorySample& a = episode.samples[i];
      const TrajectorySample& b = episode.samples[i + 1];
      const Vec2 pa{a.position.x, a.position.y};
      const Vec2 pb{b.position.x, b.position.y};
      const double dt = b.t - a.t;
      const double speed = (pb - pa).norm() * fps;
      const long cell = grid.cell_of(pa, room);
      if (cell < 0) continue;
      weighted[static_cast<std::size_t>(cell)] += speed * dt;
      grid.dwell_seconds[static_cast<std::size_t>(cell)] += dt;
    }
  }
  for (std::size_t c = 0; c < cells; ++c) {
    if (grid.dwell_seconds[c] > 0.0) {
      grid.visited[c] = 1;
      grid.mean[c] = weighted[c] / grid.dwell_seconds[c];
    }
  }
  return grid;
}

/// Masked normalized Gaussian smoothing: out = G*(mean·mask) / G*(mask),
/// evaluated separably; never-visited cells stay excluded from both the
/// convolution support and the output.
inline HeatmapGrid smoothed(const HeatmapGrid& grid) {
  HeatmapGrid out = grid;
  out.smoothed = true;
  const double sx = grid.sigma_m / grid.cell_w;
  const double sy = grid.sigma_m / grid.cell_h;
  if (sx < 1e-9 || sy < 1e-9) return out;

  const auto kernel = [](double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    for (int j = -radius; j <= radius; ++j) {
      k[static_cast<std::size_t>(j + radius)] =
          std::exp(-0.5 * (j / sigma) * (j / sigma));
    }
    return k;
  };
  const std::vector<double> kx = kernel(sx);
  const std::vector<double> ky = kernel(sy);
  const int rx = (static_cast<int>(kx.size()) - 1) / 2;
  const int ry = (static_cast<int>(ky.size()) - 1) / 2;

  const std::size_t cells = grid.mean.size();
  std::vector<double> num(cells, 0.0), den(cells, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    if (grid.visited[c]) {
      num[c] = grid.mean[c];
      den[c] = 1.0;
    }
  }

  const auto convolve_rows = [&](std::vector<double>& field) {
    std::vector<double> tmp(cells, 0.0);
    for (int row = 0; row < grid.rows; ++row) {
      for (int col = 0; col < grid.cols; ++col) {
        double acc = 0.0;
        for (int j = -rx; j <= rx; ++j) {
          const int cc = col + j;
          if (cc < 0 || cc >= grid.cols) continue;
          acc += kx[static_cast<std::size_t>(j + rx)] * field[grid.index(row, cc)];
        }
        tmp[grid.index(row, col)] = acc;
      }
    }
    field.swap(tmp);
  };
  const auto convolve_cols = [&](std::vector<double>& field) {
    std::vector<double> tmp(cells, 0.0);
    for (int col = 0; col < grid.cols; ++col) {
      for (int row = 0; row < grid.rows; ++row) {
        double acc = 0.0;
        for (int j = -ry; j <= ry; ++j) {
          const int rr = row + j;
          if (rr < 0 || rr >= grid.rows) continue;
          acc += ky[static_cast<std::size_t>(j + ry)] * field[grid.index(rr, col)];
        }
        tmp[grid.index(row, col)] = acc;
      }
    }
    field.swap(tmp);
  };

  convolve_rows(num);
  convolve_cols(num);
  convolve_rows(den);
  convolve_cols(den);

  for (std::size_t c = 0; c < cells; ++c) {
    if (grid.visited[c] && den[c] > 0.0) {
      out.mean[c] = num[c] / den[c];
    }
  }
  return out;
}

}  // namespace ergo
