#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "ergo/geometry.hpp"

namespace ergo {

/// Which anthropometric condition a run uses.
///   Baseline — generic distance increments from the config table, no profile.
///   PassageOnly (PO) — static body dimensions for operational clearances.
///   HumanOperational (HO) — movement envelopes for operational clearances.
enum class Mode { kBaseline, kPassageOnly, kHumanOperational };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::kBaseline: return "baseline";
    case Mode::kPassageOnly: return "PO";
    default: return "HO";
  }
}

inline Mode parse_mode(const std::string& s) {
  if (s == "baseline") return Mode::kBaseline;
  if (s == "PO" || s == "po") return Mode::kPassageOnly;
  if (s == "HO" || s == "ho") return Mode::kHumanOperational;
  throw ConfigError("unknown mode '" + s + "' (expected baseline, PO, or HO)");
}

struct MovablePart {
  std::string part;          // e.g. "drawer", "door"
  std::string motion_axis;   // e.g. "pull", "swing_left"
  double swing_extent = 0.0; // meters
};

/// One furniture item. Dimensions are the full width/depth/height of the
/// asset's bounding box in its local frame (+X right, +Y forward).
struct ObjectAsset {
  std::string id;
  std::string category;
  double width = 0.0;
  double depth = 0.0;
  double height = 0.0;
  std::vector<MovablePart> movable_parts;
  std::vector<std::string> image_refs;
  /// Optional pose from the incoming layout; used by the rule backend for
  /// proximity grouping and by the optimizer as a frozen pose when pinned.
  std::optional<Pose> initial_pose;
  bool fixed = false;

  double half_width() const { return 0.5 * width; }
  double half_depth() const { return 0.5 * depth; }
  OrientedFootprint footprint(const Pose& pose) const {
    return footprint_at(pose, half_width(), half_depth());
  }
  bool has_openable_part() const { return !movable_parts.empty(); }
};

enum class RelationKind {
  kFacingAccess,
  kAdjacentUse,
  kClearancePassage,
  kOperationalClearance,
  kAgainstWall,
  kAlignWith,
  kPointTowards,
  kOnTopOf,
};

inline const char* to_string(RelationKind k) {
  switch (k) {
    case RelationKind::kFacingAccess: return "facing_access";
    case RelationKind::kAdjacentUse: return "adjacent_use";
    case RelationKind::kClearancePassage: return "clearance_passage";
    case RelationKind::kOperationalClearance: return "operational_clearance";
    case RelationKind::kAgainstWall: return "against_wall";
    case RelationKind::kAlignWith: return "align_with";
    case RelationKind::kPointTowards: return "point_towards";
    default: return "on_top_of";
  }
}

inline std::optional<RelationKind> parse_relation_kind(const std::string& s) {
  if (s == "facing_access") return RelationKind::kFacingAccess;
  if (s == "adjacent_use") return RelationKind::kAdjacentUse;
  if (s == "clearance_passage") return RelationKind::kClearancePassage;
  if (s == "operational_clearance") return RelationKind::kOperationalClearance;
  if (s == "against_wall") return RelationKind::kAgainstWall;
  if (s == "align_with") return RelationKind::kAlignWith;
  if (s == "point_towards") return RelationKind::kPointTowards;
  if (s == "on_top_of") return RelationKind::kOnTopOf;
  return std::nullopt;
}

/// Does this relation kind compile to a distance band?
inline bool is_distance_relation(RelationKind k) {
  return k == RelationKind::kFacingAccess || k == RelationKind::kAdjacentUse ||
         k == RelationKind::kClearancePassage ||
         k == RelationKind::kOperationalClearance;
}

/// A behavioral spatial relation between a subject asset and either another
/// asset or a wall.
struct Relation {
  RelationKind kind = RelationKind::kFacingAccess;
  std::string subject;
  std::string object;            // empty for AgainstWall
  int wall_index = -1;           // valid only for AgainstWall
  std::optional<double> theta;   // radians, AlignWith / PointTowards offset
  std::optional<double> height;  // meters, OnTopOf offset h
  std::optional<double> tau;     // per-relation tolerance override

  bool targets_wall() const { return kind == RelationKind::kAgainstWall; }
};

/// Top human actions associated with an object, most confident first.
struct InteractionPattern {
  struct Action {
    std::string label;
    double confidence = 0.0;
  };
  std::vector<Action> top_actions;  // at most 5, confidences non-increasing
};

/// Qualitative usage summary plus the structured flags downstream stages
/// consume.
struct FunctionalDescription {
  std::string summary;
  bool has_openable_part = false;
  bool is_seat = false;
  bool requires_frontal_access = false;
  std::string viewing_target;  // asset id, empty when none
};

/// A set of objects linked by function, proximity, and shared action,
/// optimized as one unit.
struct SemanticGroup {
  std::string group_id;
  std::vector<std::string> members;
  std::vector<Relation> intra_relations;
};

/// Placement priority: groups anchored by the largest furniture go first.
/// Descending by the footprint area of the largest member, ties by member
/// count descending, then group_id lexicographic — a stable total order.
inline std::vector<SemanticGroup> group_order(const std::vector<SemanticGroup>& groups,
                                              const std::vector<ObjectAsset>& assets) {
  const auto area_of = [&](const std::string& id) {
    for (const ObjectAsset& a : assets) {
      if (a.id == id) return a.width * a.depth;
    }
    throw SchemaError("group references unknown asset '" + id + "'");
  };
  struct Keyed {
    double area;
    std::size_t members;
    const SemanticGroup* group;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(groups.size());
  for (const SemanticGroup& g : groups) {
    if (g.members.empty()) {
      throw SchemaError("group '" + g.group_id + "' has no members");
    }
    double largest = 0.0;
    for (const std::string& id : g.members) largest = std::max(largest, area_of(id));
    keyed.push_back({largest, g.members.size(), &g});
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.area != b.area) return a.area > b.area;
    if (a.members != b.members) return a.members > b.members;
    return a.group->group_id < b.group->group_id;
  });
  std::vector<SemanticGroup> ordered;
  ordered.reserve(groups.size());
  for (const Keyed& k : keyed) ordered.push_back(*k.group);
  return ordered;
}

/// The scene specification file: assets, room, and everything optionally
/// pre-supplied to bypass inference.
struct SceneSpec {
  Room room;
  std::vector<ObjectAsset> assets;
  Mode mode = Mode::kHumanOperational;
  /// When present, inference is skipped and these are used verbatim.
  std::optional<std::vector<SemanticGroup>> groups;
  std::optional<std::vector<Relation>> inter_relations;
  std::optional<std::string> profile_ref;  // path to a profile file

  const ObjectAsset* find_asset(const std::string& id) const {
    for (const auto& a : assets) {
      if (a.id == id) return &a;
    }
    return nullptr;
  }
};

}  // namespace ergo
