#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ergo/config.hpp"
#include "ergo/constraints.hpp"
#include "ergo/layout.hpp"
#include "ergo/metrics.hpp"
#include "ergo/scene.hpp"

namespace ergo {

struct OptimizerConfig {
  int iterations = 400;
  double step_position = 0.01;  // meters per step
  double step_yaw = 0.05;       // radians per step
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  int candidate_count = 5;

  void validate() const {
    std::vector<std::string> bad;
    if (iterations <= 0) bad.push_back("iterations must be > 0");
    if (!(step_position > 0.0)) bad.push_back("step_position must be > 0");
    if (!(step_yaw > 0.0)) bad.push_back("step_yaw must be > 0");
    if (candidate_count < 1) bad.push_back("candidate_count must be >= 1");
    if (!bad.empty()) throw SchemaError(bad);
  }

  static OptimizerConfig from(const EngineConfig& c, std::uint64_t seed_value) {
    OptimizerConfig out;
    out.iterations = c.iterations;
    out.step_position = c.step_position;
    out.step_yaw = c.step_yaw;
    out.beta1 = c.adam_beta1;
    out.beta2 = c.adam_beta2;
    out.epsilon = c.adam_epsilon;
    out.seed = seed_value;
    out.candidate_count = c.candidate_count;
    return out;
  }
};

/// Seeds the pose vector: positions uniform over the room inset by each
/// asset's bounding-circle radius, yaw uniform over the four cardinal
/// directions plus noise in ±0.1 rad. Assets carrying an initial pose keep
/// it and consume no randomness. Draw order per asset is x, y, quadrant,
/// noise, in asset order — fixed so identical seeds reproduce bitwise.
inline std::vector<double> initialize(const std::vector<ObjectAsset>& assets,
                                      const Room& room, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> poses;
  poses.reserve(3 * assets.size());
  for (const ObjectAsset& asset : assets) {
    if (asset.initial_pose) {
      poses.push_back(asset.initial_pose->x);
      poses.push_back(asset.initial_pose->y);
      poses.push_back(normalize_angle(asset.initial_pose->yaw));
      continue;
    }
    const double r = bounding_circle_radius(asset.half_width(), asset.half_depth());
    if (r > room.width - r || r > room.depth - r) {
      throw InfeasibleError("asset '" + asset.id +
                            "' cannot fit in the room: bounding radius " +
                            std::to_string(r) + " m leaves no valid center");
    }
    poses.push_back(rng.uniform(r, room.width - r));
    poses.push_back(rng.uniform(r, room.depth - r));
    const double quadrant = static_cast<double>(rng.uniform_index(4)) * (kPi / 2.0);
    poses.push_back(normalize_angle(quadrant + rng.uniform(-0.1, 0.1)));
  }
  return poses;
}

namespace detail {

/// Objective used for best-iterate tracking: the adaptively weighted total,
/// a well-defined (if discontinuous) function of the poses alone.
inline double adaptive_total(const ConstraintProgram& program,
                             const std::vector<double>& poses,
                             const std::vector<bool>& term_mask,
                             const EngineConfig& config) {
  const std::vector<double> w = adaptive_weights(program, poses, config);
  double total = 0.0;
  const EvalResult res = eval(program, poses, w);
  for (std::size_t i = 0; i < res.per_term.size(); ++i) {
    if (term_mask[i]) total += w[i] * res.per_term[i];
  }
  return total;
}

}  // namespace detail

/// First-order adaptive-moment descent over the active poses. Terms enter
/// the objective only when all their participants are active or frozen and
/// at least one is active; unplaced groups exert no pull. Adaptive collision
/// weights are recomputed every step. Returns the best-seen iterate by the
/// adaptively weighted total, so the reported final penalty never exceeds
/// the initial one.
inline GroupDiagnostics optimize_group(const ConstraintProgram& program,
                                       std::vector<double>& poses,
                                       const std::vector<bool>& active,
                                       const std::vector<bool>& frozen,
                                       const OptimizerConfig& config,
                                       const EngineConfig& engine,
                                       const std::string& group_id = "") {
  config.validate();
  const std::size_t n = program.pose_count();
  if (active.size() != n || frozen.size() != n) {
    throw EvalError("active/frozen mask size does not match program layout");
  }

  std::vector<bool> term_mask(program.terms.size(), false);
  for (std::size_t t = 0; t < program.terms.size(); ++t) {
    const PenaltyTerm& term = program.terms[t];
    const auto staged = [&](int idx) {
      return idx < 0 || active[static_cast<std::size_t>(idx)] ||
             frozen[static_cast<std::size_t>(idx)] ||
             program.frozen[static_cast<std::size_t>(idx)];
    };
    const auto is_active = [&](int idx) {
      return idx >= 0 && active[static_cast<std::size_t>(idx)];
    };
    term_mask[t] = staged(term.subject) && staged(term.object) &&
                   (is_active(term.subject) || is_active(term.object));
  }

  // Everything not active is immutable for this pass.
  std::vector<bool> hold(n, false);
  for (std::size_t i = 0; i < n; ++i) hold[i] = !active[i];

  GroupDiagnostics diag;
  diag.group_id = group_id;

  std::vector<double> m(3 * n, 0.0), v(3 * n, 0.0);
  std::vector<double> best = poses;
  double best_total = detail::adaptive_total(program, poses, term_mask, engine);
  diag.initial_penalty = best_total;
  diag.best_iteration = 0;

  std::vector<double> masked_weights(program.terms.size(), 0.0);
  for (int it = 1; it <= config.iterations; ++it) {
    const std::vector<double> w = adaptive_weights(program, poses, engine);
    for (std::size_t t = 0; t < w.size(); ++t) {
      masked_weights[t] = term_mask[t] ? w[t] : 0.0;
    }
    const EvalResult res = eval(program, poses, masked_weights, &hold);
    for (double g : res.gradient) {
      if (!std::isfinite(g)) {
        throw EvalError("non-finite gradient in group '" + group_id + "'");
      }
    }
    if (res.total < best_total) {
      best_total = res.total;
      best = poses;
      diag.best_iteration = it - 1;
    }

    const double bc1 = 1.0 - std::pow(config.beta1, it);
    const double bc2 = 1.0 - std::pow(config.beta2, it);
    for (std::size_t i = 0; i < n; ++i) {
      if (hold[i]) continue;
      for (int k = 0; k < 3; ++k) {
        const std::size_t p = 3 * i + static_cast<std::size_t>(k);
        const double g = res.gradient[p];
        m[p] = config.beta1 * m[p] + (1.0 - config.beta1) * g;
        v[p] = config.beta2 * v[p] + (1.0 - config.beta2) * g * g;
        const double mhat = m[p] / bc1;
        const double vhat = v[p] / bc2;
        const double step = k == 2 ? config.step_yaw : config.step_position;
        poses[p] -= step * mhat / (std::sqrt(vhat) + config.epsilon);
      }
    }
  }

  const double final_total = detail::adaptive_total(program, poses, term_mask, engine);
  if (final_total < best_total) {
    best_total = final_total;
    best = poses;
    diag.best_iteration = config.iterations;
  }
  poses = best;
  diag.final_penalty = best_total;
  return diag;
}

namespace detail {

/// Assigns stacked assets' base heights: each OnTopOf subject sits h above
/// its support's top face. Chains resolve by repeated passes.
inline void assign_stack_heights(const std::vector<ObjectAsset>& assets,
                                 const std::vector<SemanticGroup>& groups,
                                 const std::vector<Relation>& inter_relations,
                                 std::vector<AssetPlacement>& placements) {
  struct Stack {
    std::size_t subject;
    std::size_t support;
    double h;
  };
  const auto index_of = [&](const std::string& id) -> std::size_t {
    for (std::size_t i = 0; i < placements.size(); ++i) {
      if (placements[i].id == id) return i;
    }
    throw SchemaError("relation references unknown asset '" + id + "'");
  };
  std::vector<Stack> stacks;
  const auto collect = [&](const Relation& rel) {
    if (rel.kind != RelationKind::kOnTopOf) return;
    stacks.push_back({index_of(rel.subject), index_of(rel.object),
                      rel.height.value_or(0.0)});
  };
  for (const SemanticGroup& g : groups) {
    for (const Relation& rel : g.intra_relations) collect(rel);
  }
  for (const Relation& rel : inter_relations) collect(rel);

  const auto height_of = [&](std::size_t idx) {
    for (const ObjectAsset& a : assets) {
      if (a.id == placements[idx].id) return a.height;
    }
    return 0.0;
  };
  for (std::size_t pass = 0; pass < placements.size() + 1; ++pass) {
    bool changed = false;
    for (const Stack& s : stacks) {
      const double z = placements[s.support].pose.z_base + height_of(s.support) + s.h;
      if (placements[s.subject].pose.z_base != z) {
        placements[s.subject].pose.z_base = z;
        changed = true;
      }
    }
    if (!changed) break;
  }
}

}  // namespace detail

/// Sequential per-group optimization: groups are processed in priority
/// order, each group's poses joining the frozen set once placed. Assets
/// outside every group form one trailing implicit group. Deterministic in
/// (scene, config, seed).
inline SceneLayout optimize_scene(const std::vector<ObjectAsset>& assets,
                                  const std::vector<SemanticGroup>& groups,
                                  const std::vector<Relation>& inter_relations,
                                  const AnthropometricProfile* profile,
                                  const Room& room, Mode mode,
                                  const DimensionMap& map,
                                  const EngineConfig& engine,
                                  std::uint64_t seed) {
  const ConstraintProgram program =
      compile(assets, groups, inter_relations, profile, room, mode, map, engine);
  std::vector<double> poses = initialize(assets, room, seed);
  const OptimizerConfig opt = OptimizerConfig::from(engine, seed);

  SceneLayout layout;
  layout.room = room;
  layout.seed = seed;

  const std::size_t n = program.pose_count();
  std::vector<bool> placed(n, false);
  for (std::size_t i = 0; i < n; ++i) placed[i] = program.frozen[i];

  std::vector<std::vector<std::size_t>> passes;
  std::vector<std::string> pass_ids;
  std::vector<bool> covered(n, false);
  for (const SemanticGroup& g : group_order(groups, assets)) {
    std::vector<std::size_t> members;
    for (const std::string& id : g.members) {
      const int idx = program.index_of(id);
      if (idx < 0) throw SchemaError("group references unknown asset '" + id + "'");
      if (covered[static_cast<std::size_t>(idx)]) {
        throw SchemaError("asset '" + id + "' belongs to more than one group");
      }
      covered[static_cast<std::size_t>(idx)] = true;
      members.push_back(static_cast<std::size_t>(idx));
    }
    passes.push_back(std::move(members));
    pass_ids.push_back(g.group_id);
  }
  std::vector<std::size_t> leftover;
  for (std::size_t i = 0; i < n; ++i) {
    if (!covered[i]) leftover.push_back(i);
  }
  if (!leftover.empty()) {
    passes.push_back(std::move(leftover));
    pass_ids.push_back("ungrouped");
  }

  for (std::size_t p = 0; p < passes.size(); ++p) {
    std::vector<bool> active(n, false);
    bool any_active = false;
    for (std::size_t idx : passes[p]) {
      if (!program.frozen[idx]) {
        active[idx] = true;
        any_active = true;
      }
    }
    if (any_active) {
      try {
        layout.group_diagnostics.push_back(
            optimize_group(program, poses, active, placed, opt, engine, pass_ids[p]));
      } catch (const EvalError& e) {
        throw EvalError("group '" + pass_ids[p] + "': " + e.what());
      }
    }
    for (std::size_t idx : passes[p]) placed[idx] = true;
  }

  layout.assets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    AssetPlacement placement;
    placement.id = program.asset_ids[i];
    placement.pose = {poses[3 * i], poses[3 * i + 1],
                      normalize_angle(poses[3 * i + 2]), 0.0};
    placement.half_width = program.shapes[i].half_width;
    placement.half_depth = program.shapes[i].half_depth;
    for (const ObjectAsset& a : assets) {
      if (a.id != placement.id) continue;
      placement.category = a.category;
      placement.height = a.height;
      placement.openable = a.has_openable_part();
      // Pinned assets keep their declared base height.
      if (a.initial_pose) placement.pose.z_base = a.initial_pose->z_base;
    }
    layout.assets.push_back(std::move(placement));
  }
  detail::assign_stack_heights(assets, groups, inter_relations, layout.assets);

  const EvalResult final_eval = eval(program, poses);
  layout.total_penalty = final_eval.total;
  layout.final_violations = final_eval.per_term;
  return layout;
}

/// Runs candidates for seeds seed..seed+candidate_count-1 (optionally in
/// parallel; candidates share nothing) and returns the argmax of
/// collision_free_score. Ties break toward lower total penalty, then lower
/// seed, so the reduction is order-independent.
inline SceneLayout select_candidate(const std::vector<ObjectAsset>& assets,
                                    const std::vector<SemanticGroup>& groups,
                                    const std::vector<Relation>& inter_relations,
                                    const AnthropometricProfile* profile,
                                    const Room& room, Mode mode,
                                    const DimensionMap& map,
                                    const EngineConfig& engine, std::uint64_t seed,
                                    int jobs = 1) {
  const int count = std::max(1, engine.candidate_count);
  std::vector<std::optional<SceneLayout>> results(static_cast<std::size_t>(count));
  std::vector<std::string> failures(static_cast<std::size_t>(count));

  const auto run_one = [&](int c) {
    try {
      results[static_cast<std::size_t>(c)] =
          optimize_scene(assets, groups, inter_relations, profile, room, mode, map,
                         engine, seed + static_cast<std::uint64_t>(c));
    } catch (const Error& e) {
      failures[static_cast<std::size_t>(c)] =
          "seed " + std::to_string(seed + static_cast<std::uint64_t>(c)) + ": " + e.what();
    }
  };

  const int workers = std::max(1, std::min(jobs, count));
  if (workers == 1) {
    for (int c = 0; c < count; ++c) run_one(c);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (int c = next.fetch_add(1); c < count; c = next.fetch_add(1)) run_one(c);
      });
    }
    for (std::thread& t : pool) t.join();
  }

  int best = -1;
  double best_score = -1.0;
  for (int c = 0; c < count; ++c) {
    const auto& r = results[static_cast<std::size_t>(c)];
    if (!r) continue;
    const double score = collision_free_score(*r);
    const bool wins =
        best < 0 || score > best_score ||
        (score == best_score &&
         r->total_penalty < results[static_cast<std::size_t>(best)]->total_penalty);
    if (wins) {
      best = c;
      best_score = score;
    }
  }
  if (best < 0) {
    std::string all;
    for (const std::string& f : failures) {
      if (!f.empty()) all += (all.empty() ? "" : "; ") + f;
    }
    throw InfeasibleError("all candidates failed: " + all);
  }
  return *results[static_cast<std::size_t>(best)];
}

}  // namespace ergo
