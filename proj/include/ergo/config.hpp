#pragma once

#include <map>
#include <string>

namespace ergo {

/// All tunables in one place. Values with no empirically grounded source are
/// deliberately plain config keys so runs can override them; the manifest
/// records the resolved set.
struct EngineConfig {
  // Band tolerances (meters) applied when a relation carries no tau override.
  double tau_accessibility = 0.10;
  double tau_clearance = 0.15;

  // Penalty weights. Collision weight switches between base and boost
  // depending on pairwise overlap (see adaptive_weights).
  double weight_default = 1.0;
  double collision_weight_base = 1.0;
  double collision_weight_boost = 10.0;
  double overlap_boost_threshold = 0.5;

  // Generic distance increments (meters) substituted for body dimensions in
  // baseline mode, keyed by relation kind.
  std::map<std::string, double> baseline_dims = {
      {"facing_access", 0.75},
      {"adjacent_use", 0.45},
      {"clearance_passage", 0.60},
      {"operational_clearance", 0.95},
  };

  // Rule backend.
  double grouping_proximity_m = 1.5;
  /// What to do when the backend emits conflicting relations for one asset:
  /// "report" surfaces them in diagnostics without resolving.
  std::string conflict_policy = "report";

  // Optimizer.
  int iterations = 400;
  /// Whether `iterations` counts per group or is split across the scene.
  std::string iterations_scope = "per_group";
  double step_position = 0.01;  // meters per step
  double step_yaw = 0.05;       // radians per step
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int candidate_count = 5;

  // Metrics.
  double detour_proximity_m = 0.5;
  double heatmap_sigma_m = 0.01;
  int heatmap_resolution = 1024;
  double occupancy_voxel_m = 0.05;
};

}  // namespace ergo
