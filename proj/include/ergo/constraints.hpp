#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ergo/anthropometry.hpp"
#include "ergo/config.hpp"
#include "ergo/geometry.hpp"
#include "ergo/scene.hpp"

namespace ergo {

enum class PenaltyKind {
  kDistance,
  kAgainstWall,
  kAlignWith,
  kPointTowards,
  kOnTopOf,
  kCollision,
  kBoundary,
};

inline const char* to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::kDistance: return "distance";
    case PenaltyKind::kAgainstWall: return "against_wall";
    case PenaltyKind::kAlignWith: return "align_with";
    case PenaltyKind::kPointTowards: return "point_towards";
    case PenaltyKind::kOnTopOf: return "on_top_of";
    case PenaltyKind::kCollision: return "collision";
    default: return "boundary";
  }
}

/// One weighted differentiable penalty over one or two poses.
///
/// Penalty forms (v is always >= 0 and exactly 0 on the satisfied set):
///   Distance      v = max(0, d_min - d)^2 + max(0, d - d_max)^2
///   AlignWith     v = 1 - cos(yaw_i - yaw_j - theta)
///   PointTowards  v = 1 - cos(signed angle(front_i, dir i->j) - theta)
///   AgainstWall   v = wall_distance^2 + (1 - cos(yaw_i - wall_back_yaw))
///   OnTopOf       v = clipped squared center offset in the support frame
///   Collision     v = penetration_depth^2
///   Boundary      v = sum over corners of squared distance outside the room
struct PenaltyTerm {
  PenaltyKind kind = PenaltyKind::kDistance;
  int subject = -1;     // pose index
  int object = -1;      // pose index; -1 for single-pose terms
  int wall_index = -1;  // kAgainstWall only
  DistanceBand band;    // kDistance only
  double theta = 0.0;   // orientation offset, radians
  double height = 0.0;  // kOnTopOf vertical offset, meters
  double weight = 1.0;
  /// Originating relation and anthropometric rationale, for explain output.
  std::string provenance;
};

/// Footprint half-extents of the asset behind each pose index.
struct AssetShape {
  double half_width = 0.0;
  double half_depth = 0.0;
};

/// Compiled set of penalty terms over the pose vector of one scene.
/// The pose vector stores (x, y, yaw) per asset, in asset order.
struct ConstraintProgram {
  std::vector<PenaltyTerm> terms;
  std::vector<std::string> asset_ids;
  std::vector<AssetShape> shapes;
  Room room;
  /// Poses pinned by the scene file; they never receive gradient.
  std::vector<bool> frozen;

  std::size_t pose_count() const { return asset_ids.size(); }
  std::size_t dof_count() const { return 3 * asset_ids.size(); }

  int index_of(const std::string& asset_id) const {
    for (std::size_t i = 0; i < asset_ids.size(); ++i) {
      if (asset_ids[i] == asset_id) return static_cast<int>(i);
    }
    return -1;
  }
};

namespace detail {

inline Pose pose_at(std::span<const double> poses, int index) {
  const std::size_t base = 3 * static_cast<std::size_t>(index);
  return {poses[base], poses[base + 1], poses[base + 2], 0.0};
}

inline OrientedFootprint footprint_of(const ConstraintProgram& program,
                                      std::span<const double> poses, int index) {
  const Pose p = pose_at(poses, index);
  const AssetShape& s = program.shapes[static_cast<std::size_t>(index)];
  return footprint_at(p, s.half_width, s.half_depth);
}

struct TermGrad {
  PoseGrad subject;
  PoseGrad object;
};

constexpr double kMinSeparation = 1e-9;

inline double eval_distance(const PenaltyTerm& term, const Pose& pi, const Pose& pj,
                            TermGrad& g) {
  const Vec2 w = pj.position() - pi.position();
  double d = w.norm();
  Vec2 u{1.0, 0.0};  // fixed subgradient direction for coincident centers
  if (d > kMinSeparation) u = w / d;
  const double lo = std::max(0.0, term.band.d_min - d);
  const double hi = std::max(0.0, d - term.band.d_max);
  const double dv_dd = -2.0 * lo + 2.0 * hi;
  g.subject.x = -dv_dd * u.x;
  g.subject.y = -dv_dd * u.y;
  g.object.x = dv_dd * u.x;
  g.object.y = dv_dd * u.y;
  return lo * lo + hi * hi;
}

inline double eval_align_with(const PenaltyTerm& term, const Pose& pi, const Pose& pj,
                              TermGrad& g) {
  const double delta = pi.yaw - pj.yaw - term.theta;
  g.subject.yaw = std::sin(delta);
  g.object.yaw = -std::sin(delta);
  return 1.0 - std::cos(delta);
}

// v = 1 - cos(alpha - theta) expanded through cos(alpha) = f.u and
// sin(alpha) = f x u, which keeps the expression smooth without atan2.
inline double eval_point_towards(const PenaltyTerm& term, const Pose& pi, const Pose& pj,
                                 TermGrad& g) {
  const Vec2 f = front_direction(pi.yaw);
  const Vec2 w = pj.position() - pi.position();
  const double len = w.norm();
  if (len <= kMinSeparation) return 0.0;  // undefined direction; no push
  const Vec2 u = w / len;
  const double ct = std::cos(term.theta);
  const double st = std::sin(term.theta);
  const double v = 1.0 - ct * f.dot(u) - st * f.cross(u);

  const Vec2 dv_df = {-ct * u.x - st * u.y, -ct * u.y + st * u.x};
  const Vec2 dv_du = {-ct * f.x + st * f.y, -ct * f.y - st * f.x};
  const Vec2 df_dyaw = {-std::cos(pi.yaw), -std::sin(pi.yaw)};
  g.subject.yaw = dv_df.dot(df_dyaw);

  // u = w/|w|  =>  grad_w = (dv_du - (dv_du . u) u) / |w|
  const double radial = dv_du.dot(u);
  const Vec2 grad_w = {(dv_du.x - radial * u.x) / len, (dv_du.y - radial * u.y) / len};
  g.subject.x = -grad_w.x;
  g.subject.y = -grad_w.y;
  g.object.x = grad_w.x;
  g.object.y = grad_w.y;
  return v;
}

inline double eval_against_wall(const ConstraintProgram& program, const PenaltyTerm& term,
                                std::span<const double> poses, TermGrad& g) {
  const OrientedFootprint fp = footprint_of(program, poses, term.subject);
  PoseGrad wd_grad;
  const double wd = wall_distance_grad(fp, program.room, term.wall_index, wd_grad);
  const double delta = pose_at(poses, term.subject).yaw - wall_back_yaw(term.wall_index);
  g.subject = wd_grad * (2.0 * wd);
  g.subject.yaw += std::sin(delta);
  return wd * wd + (1.0 - std::cos(delta));
}

inline double eval_on_top_of(const ConstraintProgram& program, const PenaltyTerm& term,
                             std::span<const double> poses, TermGrad& g) {
  const Pose pi = pose_at(poses, term.subject);
  const Pose pj = pose_at(poses, term.object);
  const AssetShape& si = program.shapes[static_cast<std::size_t>(term.subject)];
  const AssetShape& sj = program.shapes[static_cast<std::size_t>(term.object)];
  // Offset expressed in the support's frame; the hinge margin allows any
  // position that keeps the subject fully over the support.
  const Vec2 w = pi.position() - pj.position();
  const double c = std::cos(pj.yaw);
  const double s = std::sin(pj.yaw);
  const Vec2 p = {c * w.x + s * w.y, -s * w.x + c * w.y};
  const double mx = std::max(0.0, sj.half_width - si.half_width);
  const double my = std::max(0.0, sj.half_depth - si.half_depth);

  const double hx = std::max(0.0, std::abs(p.x) - mx);
  const double hy = std::max(0.0, std::abs(p.y) - my);
  const double dv_dpx = 2.0 * hx * (p.x >= 0.0 ? 1.0 : -1.0);
  const double dv_dpy = 2.0 * hy * (p.y >= 0.0 ? 1.0 : -1.0);

  const Vec2 grad_w = {dv_dpx * c - dv_dpy * s, dv_dpx * s + dv_dpy * c};
  g.subject.x = grad_w.x;
  g.subject.y = grad_w.y;
  g.object.x = -grad_w.x;
  g.object.y = -grad_w.y;
  g.object.yaw = dv_dpx * p.y - dv_dpy * p.x;
  return hx * hx + hy * hy;
}

inline double eval_collision(const ConstraintProgram& program, const PenaltyTerm& term,
                             std::span<const double> poses, TermGrad& g) {
  const OrientedFootprint fa = footprint_of(program, poses, term.subject);
  const OrientedFootprint fb = footprint_of(program, poses, term.object);
  PoseGrad ga, gb;
  const double pd = penetration_depth_grad(fa, fb, ga, gb);
  g.subject = ga * (2.0 * pd);
  g.object = gb * (2.0 * pd);
  return pd * pd;
}

inline double eval_boundary(const ConstraintProgram& program, const PenaltyTerm& term,
                            std::span<const double> poses, TermGrad& g) {
  const OrientedFootprint fp = footprint_of(program, poses, term.subject);
  const Room& room = program.room;
  double v = 0.0;
  for (const Vec2& corner : fp.corners()) {
    const double lo_x = std::max(0.0, -corner.x);
    const double hi_x = std::max(0.0, corner.x - room.width);
    const double lo_y = std::max(0.0, -corner.y);
    const double hi_y = std::max(0.0, corner.y - room.depth);
    v += lo_x * lo_x + hi_x * hi_x + lo_y * lo_y + hi_y * hi_y;
    const double dv_dx = -2.0 * lo_x + 2.0 * hi_x;
    const double dv_dy = -2.0 * lo_y + 2.0 * hi_y;
    const Vec2 arm_perp = (corner - fp.center).perp();
    g.subject.x += dv_dx;
    g.subject.y += dv_dy;
    g.subject.yaw += dv_dx * arm_perp.x + dv_dy * arm_perp.y;
  }
  return v;
}

}  // namespace detail

struct EvalResult {
  double total = 0.0;
  std::vector<double> per_term;  // unweighted violation per term
  std::vector<double> gradient;  // d(total)/d(x, y, yaw) per pose
};

/// Evaluates total = sum_i w_i * v_i with its analytic gradient.
/// `weights` overrides the terms' stored weights when non-empty (see
/// adaptive_weights). `extra_frozen` marks additional poses whose gradient
/// entries are forced to zero on top of the program's own frozen set.
inline EvalResult eval(const ConstraintProgram& program, std::span<const double> poses,
                       std::span<const double> weights = {},
                       const std::vector<bool>* extra_frozen = nullptr) {
  if (poses.size() != program.dof_count()) {
    throw EvalError("pose vector length " + std::to_string(poses.size()) +
                    " does not match program layout " +
                    std::to_string(program.dof_count()));
  }
  for (double p : poses) {
    if (!std::isfinite(p)) throw EvalError("non-finite pose parameter");
  }
  if (!weights.empty() && weights.size() != program.terms.size()) {
    throw EvalError("weight vector length does not match term count");
  }

  EvalResult result;
  result.per_term.resize(program.terms.size(), 0.0);
  result.gradient.assign(program.dof_count(), 0.0);

  for (std::size_t ti = 0; ti < program.terms.size(); ++ti) {
    const PenaltyTerm& term = program.terms[ti];
    detail::TermGrad g;
    double v = 0.0;
    switch (term.kind) {
      case PenaltyKind::kDistance:
        v = detail::eval_distance(term, detail::pose_at(poses, term.subject),
                                  detail::pose_at(poses, term.object), g);
        break;
      case PenaltyKind::kAlignWith:
        v = detail::eval_align_with(term, detail::pose_at(poses, term.subject),
                                    detail::pose_at(poses, term.object), g);
        break;
      case PenaltyKind::kPointTowards:
        v = detail::eval_point_towards(term, detail::pose_at(poses, term.subject),
                                       detail::pose_at(poses, term.object), g);
        break;
      case PenaltyKind::kAgainstWall:
        v = detail::eval_against_wall(program, term, poses, g);
        break;
      case PenaltyKind::kOnTopOf:
        v = detail::eval_on_top_of(program, term, poses, g);
        break;
      case PenaltyKind::kCollision:
        v = detail::eval_collision(program, term, poses, g);
        break;
      case PenaltyKind::kBoundary:
        v = detail::eval_boundary(program, term, poses, g);
        break;
    }
    if (!std::isfinite(v)) {
      throw EvalError(std::string("non-finite violation in term ") +
                      std::to_string(ti) + " (" + to_string(term.kind) + ")");
    }
    const double w = weights.empty() ? term.weight : weights[ti];
    result.per_term[ti] = v;
    result.total += w * v;

    const auto accumulate = [&](int pose_index, const PoseGrad& pg) {
      if (pose_index < 0) return;
      const std::size_t idx = static_cast<std::size_t>(pose_index);
      if (program.frozen[idx]) return;
      if (extra_frozen && (*extra_frozen)[idx]) return;
      result.gradient[3 * idx] += w * pg.x;
      result.gradient[3 * idx + 1] += w * pg.y;
      result.gradient[3 * idx + 2] += w * pg.yaw;
    };
    accumulate(term.subject, g.subject);
    accumulate(term.object, g.object);
  }
  return result;
}

/// Recomputes collision weights from the current poses: boost when the pair
/// overlaps more than the threshold (strict), base otherwise. Every other
/// weight passes through unchanged. Pure function of (program, poses).
inline std::vector<double> adaptive_weights(const ConstraintProgram& program,
                                            std::span<const double> poses,
                                            const EngineConfig& config = {}) {
  std::vector<double> weights;
  weights.reserve(program.terms.size());
  for (const PenaltyTerm& term : program.terms) {
    if (term.kind != PenaltyKind::kCollision) {
      weights.push_back(term.weight);
      continue;
    }
    const OrientedFootprint fa = detail::footprint_of(program, poses, term.subject);
    const OrientedFootprint fb = detail::footprint_of(program, poses, term.object);
    const bool boosted = overlap_ratio(fa, fb) > config.overlap_boost_threshold;
    weights.push_back(boosted ? config.collision_weight_boost
                              : config.collision_weight_base);
  }
  return weights;
}

// ---------------------------------------------------------------------------
// Compilation
// ---------------------------------------------------------------------------

namespace detail {

inline ApproachAxis approach_axis_for(const Relation& rel) {
  // A quarter-turn offset on a distance-bearing relation means the subject
  // approaches from the side, so the lateral half-extents and dimensions
  // govern the band.
  if (rel.theta) {
    const double t = normalize_angle(*rel.theta);
    if (std::abs(t - kPi / 2.0) < 1e-6 || std::abs(t - 3.0 * kPi / 2.0) < 1e-6) {
      return ApproachAxis::kLateral;
    }
  }
  return ApproachAxis::kFrontal;
}

inline DistanceBand band_for_relation(const Relation& rel, const ObjectAsset& subject,
                                      const ObjectAsset& object,
                                      const AnthropometricProfile* profile,
                                      const DimensionMap& map, Mode mode,
                                      const EngineConfig& config, std::string& rationale_note) {
  const BandRationale rationale = map.rationale_for(rel.kind);
  const double tau = rel.tau.value_or(rationale == BandRationale::kAccessibility
                                          ? config.tau_accessibility
                                          : config.tau_clearance);
  const ApproachAxis axis = approach_axis_for(rel);
  if (mode == Mode::kBaseline) {
    auto it = config.baseline_dims.find(to_string(rel.kind));
    if (it == config.baseline_dims.end()) {
      throw ConfigError(std::string("no baseline distance configured for relation '") +
                        to_string(rel.kind) + "'");
    }
    const double extent_sum = axis == ApproachAxis::kFrontal
                                  ? subject.half_depth() + object.half_depth()
                                  : subject.half_width() + object.half_width();
    DistanceBand band = make_distance_band(extent_sum, it->second, rationale, tau);
    band.dimension = "generic";
    band.axis = axis;
    rationale_note = "generic " + std::to_string(it->second) + " m";
    return band;
  }
  DistanceBand band =
      derive_distance_band(rel.kind, subject, object, *profile, tau, map, mode, axis);
  rationale_note = std::string(to_string(band.rationale)) + " via " + band.dimension +
                   " (" + to_string(band.axis) + ")";
  return band;
}

}  // namespace detail

/// Compiles groups and inter-group relations into a constraint program.
///
/// Construction rules, in deterministic order:
///   - per relation (group intra lists first, then inter list):
///     distance-bearing kinds emit one Distance term; FacingAccess also
///     emits the facing PointTowards term; orientation and stacking kinds
///     emit their own term.
///   - one Collision term per unordered asset pair, except pairs connected
///     by OnTopOf (stacked objects are expected to overlap in plan view).
///   - one Boundary term per asset.
inline ConstraintProgram compile(const std::vector<ObjectAsset>& assets,
                                 const std::vector<SemanticGroup>& groups,
                                 const std::vector<Relation>& inter_relations,
                                 const AnthropometricProfile* profile, const Room& room,
                                 Mode mode, const DimensionMap& map,
                                 const EngineConfig& config = {}) {
  if (mode != Mode::kBaseline && profile == nullptr) {
    throw ConfigError("profile required for PO and HO modes");
  }

  ConstraintProgram program;
  program.room = room;
  program.asset_ids.reserve(assets.size());
  for (const ObjectAsset& a : assets) {
    program.asset_ids.push_back(a.id);
    program.shapes.push_back({a.half_width(), a.half_depth()});
    program.frozen.push_back(a.fixed);
  }

  const auto asset_by_id = [&](const std::string& id) -> const ObjectAsset& {
    for (const ObjectAsset& a : assets) {
      if (a.id == id) return a;
    }
    throw SchemaError("relation references unknown asset '" + id + "'");
  };

  std::vector<std::pair<int, int>> stacked_pairs;

  const auto emit_relation = [&](const Relation& rel, const std::string& origin) {
    const int si = program.index_of(rel.subject);
    if (si < 0) throw SchemaError("relation references unknown asset '" + rel.subject + "'");

    if (rel.kind == RelationKind::kAgainstWall) {
      if (rel.wall_index < 0 || rel.wall_index > 3) {
        throw SchemaError("against_wall relation for '" + rel.subject +
                          "' has invalid wall index");
      }
      PenaltyTerm term;
      term.kind = PenaltyKind::kAgainstWall;
      term.subject = si;
      term.wall_index = rel.wall_index;
      term.weight = config.weight_default;
      term.provenance = origin + " against_wall " + rel.subject + " wall " +
                        std::to_string(rel.wall_index);
      program.terms.push_back(term);
      return;
    }

    const int oi = program.index_of(rel.object);
    if (oi < 0) throw SchemaError("relation references unknown asset '" + rel.object + "'");
    if (si == oi) throw SchemaError("relation subject equals object ('" + rel.subject + "')");

    if (is_distance_relation(rel.kind)) {
      std::string note;
      PenaltyTerm term;
      term.kind = PenaltyKind::kDistance;
      term.subject = si;
      term.object = oi;
      term.band = detail::band_for_relation(rel, asset_by_id(rel.subject),
                                            asset_by_id(rel.object), profile, map, mode,
                                            config, note);
      term.weight = config.weight_default;
      term.provenance = origin + " " + std::string(to_string(rel.kind)) + " " +
                        rel.subject + "->" + rel.object + "; " + note;
      program.terms.push_back(term);

      if (rel.kind == RelationKind::kFacingAccess) {
        PenaltyTerm facing;
        facing.kind = PenaltyKind::kPointTowards;
        facing.subject = si;
        facing.object = oi;
        facing.theta = 0.0;
        facing.weight = config.weight_default;
        facing.provenance = origin + " facing_access " + rel.subject + "->" + rel.object +
                            "; front toward target";
        program.terms.push_back(facing);
      }
      return;
    }

    PenaltyTerm term;
    term.subject = si;
    term.object = oi;
    term.weight = config.weight_default;
    term.provenance = origin + " " + std::string(to_string(rel.kind)) + " " + rel.subject +
                      "->" + rel.object;
    switch (rel.kind) {
      case RelationKind::kAlignWith:
        term.kind = PenaltyKind::kAlignWith;
        term.theta = rel.theta.value_or(0.0);
        break;
      case RelationKind::kPointTowards:
        term.kind = PenaltyKind::kPointTowards;
        term.theta = rel.theta.value_or(0.0);
        break;
      case RelationKind::kOnTopOf:
        term.kind = PenaltyKind::kOnTopOf;
        term.height = rel.height.value_or(0.0);
        if (term.height < 0.0) {
          throw SchemaError("on_top_of relation for '" + rel.subject +
                            "' requires height >= 0");
        }
        stacked_pairs.emplace_back(std::min(si, oi), std::max(si, oi));
        break;
      default:
        throw SchemaError(std::string("unhandled relation kind '") + to_string(rel.kind) + "'");
    }
    program.terms.push_back(term);
  };

  for (const SemanticGroup& group : groups) {
    for (const Relation& rel : group.intra_relations) {
      emit_relation(rel, "intra:" + group.group_id);
    }
  }
  for (const Relation& rel : inter_relations) {
    emit_relation(rel, "inter");
  }

  const auto is_stacked = [&](int i, int j) {
    for (const auto& [a, b] : stacked_pairs) {
      if (a == i && b == j) return true;
    }
    return false;
  };
  const int n = static_cast<int>(assets.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (is_stacked(i, j)) continue;
      PenaltyTerm term;
      term.kind = PenaltyKind::kCollision;
      term.subject = i;
      term.object = j;
      term.weight = config.collision_weight_base;
      term.provenance = "collision " + assets[std::size_t(i)].id + "<->" +
                        assets[std::size_t(j)].id;
      program.terms.push_back(term);
    }
  }
  for (int i = 0; i < n; ++i) {
    PenaltyTerm term;
    term.kind = PenaltyKind::kBoundary;
    term.subject = i;
    term.weight = config.weight_default;
    term.provenance = "room boundary " + assets[std::size_t(i)].id;
    program.terms.push_back(term);
  }
  return program;
}

}  // namespace ergo
