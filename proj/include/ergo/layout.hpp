#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergo/geometry.hpp"

namespace ergo {

/// One asset's optimized placement. z_base lives in the pose; stacking
/// relations assign it algebraically after planar optimization. Category
/// and the openable flag ride along so a layout file alone supports the
/// evaluation stage (manipulation boxes need them).
struct AssetPlacement {
  std::string id;
  std::string category;
  Pose pose;
  double half_width = 0.0;
  double half_depth = 0.0;
  double height = 0.0;
  bool openable = false;

  OrientedFootprint footprint() const {
    return footprint_at(pose, half_width, half_depth);
  }
};

struct GroupDiagnostics {
  std::string group_id;
  double initial_penalty = 0.0;
  double final_penalty = 0.0;
  int best_iteration = 0;
};

/// Final optimized scene plus enough provenance to reproduce and audit it.
struct SceneLayout {
  Room room;
  std::vector<AssetPlacement> assets;

  std::uint64_t seed = 0;
  std::string config_hash;
  double total_penalty = 0.0;
  /// Unweighted violation per program term, in program term order.
  std::vector<double> final_violations;
  std::vector<GroupDiagnostics> group_diagnostics;

  const AssetPlacement* find(const std::string& id) const {
    for (const AssetPlacement& a : assets) {
      if (a.id == id) return &a;
    }
    return nullptr;
  }
};

}  // namespace ergo
