#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ergo/common.hpp"
#include "ergo/scene.hpp"

namespace ergo {

/// Canonical body dimension names, in sampling order.
inline const std::array<std::string, 7>& canonical_dimensions() {
  static const std::array<std::string, 7> names = {
      "body_breadth",      "body_depth",         "forward_reach", "lateral_reach",
      "extended_arm_reach", "buttock_toe_length", "stature"};
  return names;
}

/// Named body dimensions in meters for one person (or the per-dimension
/// maximum of a team, see max_profile).
struct AnthropometricProfile {
  double body_breadth = 0.0;
  double body_depth = 0.0;
  double forward_reach = 0.0;
  double lateral_reach = 0.0;
  double extended_arm_reach = 0.0;
  double buttock_toe_length = 0.0;
  double stature = 0.0;
  std::map<std::string, double> extras;

  double dimension(const std::string& name) const {
    if (name == "body_breadth") return body_breadth;
    if (name == "body_depth") return body_depth;
    if (name == "forward_reach") return forward_reach;
    if (name == "lateral_reach") return lateral_reach;
    if (name == "extended_arm_reach") return extended_arm_reach;
    if (name == "buttock_toe_length") return buttock_toe_length;
    if (name == "stature") return stature;
    auto it = extras.find(name);
    if (it == extras.end()) {
      throw ConfigError("profile has no dimension named '" + name + "'");
    }
    return it->second;
  }

  void set_dimension(const std::string& name, double value) {
    if (name == "body_breadth") body_breadth = value;
    else if (name == "body_depth") body_depth = value;
    else if (name == "forward_reach") forward_reach = value;
    else if (name == "lateral_reach") lateral_reach = value;
    else if (name == "extended_arm_reach") extended_arm_reach = value;
    else if (name == "buttock_toe_length") buttock_toe_length = value;
    else if (name == "stature") stature = value;
    else extras[name] = value;
  }

  void validate() const {
    std::vector<std::string> bad;
    for (const auto& name : canonical_dimensions()) {
      if (!(dimension(name) > 0.0)) bad.push_back("dimension '" + name + "' must be > 0");
    }
    for (const auto& [name, value] : extras) {
      if (!(value > 0.0)) bad.push_back("dimension '" + name + "' must be > 0");
    }
    if (forward_reach > extended_arm_reach) {
      bad.push_back("forward_reach must not exceed extended_arm_reach");
    }
    if (!(stature > body_breadth)) {
      bad.push_back("stature must exceed body_breadth");
    }
    if (!bad.empty()) throw SchemaError(bad);
  }
};

/// Team profile: per-dimension maximum across members, so clearances
/// accommodate every member.
inline AnthropometricProfile max_profile(std::span<const AnthropometricProfile> members) {
  if (members.empty()) throw ConfigError("max_profile requires at least one profile");
  AnthropometricProfile out = members[0];
  for (std::size_t i = 1; i < members.size(); ++i) {
    const auto& p = members[i];
    for (const auto& name : canonical_dimensions()) {
      out.set_dimension(name, std::max(out.dimension(name), p.dimension(name)));
    }
    for (const auto& [name, value] : p.extras) {
      auto it = out.extras.find(name);
      out.extras[name] = it == out.extras.end() ? value : std::max(it->second, value);
    }
  }
  return out;
}

/// Population 5th/95th percentile bounds per dimension, loaded from a data
/// file. Values are user-supplied reference data, not part of the engine.
struct PercentileTable {
  struct Range {
    double p5 = 0.0;
    double p95 = 0.0;
  };
  std::map<std::string, Range> dimensions;

  void validate() const {
    std::vector<std::string> bad;
    for (const auto& name : canonical_dimensions()) {
      if (dimensions.find(name) == dimensions.end()) {
        bad.push_back("percentile table missing dimension '" + name + "'");
      }
    }
    for (const auto& [name, r] : dimensions) {
      if (!(r.p5 > 0.0)) bad.push_back("'" + name + "': p5 must be > 0");
      if (r.p5 > r.p95) bad.push_back("'" + name + "': p5 must not exceed p95");
    }
    if (!bad.empty()) throw SchemaError(bad);
  }
};

/// Draws a plausible profile with every dimension uniform in [p5, p95].
/// Deterministic for a given seed. Dimensions that violate the profile's
/// ordering constraints are redrawn, with a bounded retry budget.
inline AnthropometricProfile sample_profile(const PercentileTable& table,
                                            std::uint64_t seed) {
  table.validate();
  Rng rng(seed);
  AnthropometricProfile p;
  const auto draw = [&](const std::string& name) {
    const auto& r = table.dimensions.at(name);
    return rng.uniform(r.p5, r.p95);
  };
  for (const auto& name : canonical_dimensions()) {
    p.set_dimension(name, draw(name));
  }
  // Extra dimensions beyond the canonical set, in key order.
  for (const auto& [name, r] : table.dimensions) {
    bool canonical = false;
    for (const auto& c : canonical_dimensions()) {
      if (name == c) {
        canonical = true;
        break;
      }
    }
    if (!canonical) p.extras[name] = rng.uniform(r.p5, r.p95);
  }

  constexpr int kRetryBudget = 100;
  int budget = kRetryBudget;
  while (p.forward_reach > p.extended_arm_reach && budget-- > 0) {
    p.extended_arm_reach = draw("extended_arm_reach");
    if (p.forward_reach > p.extended_arm_reach) p.forward_reach = draw("forward_reach");
  }
  budget = kRetryBudget;
  while (p.stature <= p.body_breadth && budget-- > 0) {
    p.stature = draw("stature");
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Distance bands
// ---------------------------------------------------------------------------

enum class BandRationale { kAccessibility, kClearance };

inline const char* to_string(BandRationale r) {
  return r == BandRationale::kAccessibility ? "accessibility" : "clearance";
}

/// Which half-extent of the pair composes the band.
enum class ApproachAxis { kFrontal, kLateral };

inline const char* to_string(ApproachAxis a) {
  return a == ApproachAxis::kFrontal ? "frontal" : "lateral";
}

/// Admissible center-to-center distance range for one relation.
struct DistanceBand {
  double d_min = 0.0;
  double d_max = 0.0;
  BandRationale rationale = BandRationale::kAccessibility;
  double tau = 0.0;
  /// Provenance: which body dimension and approach axis produced the band.
  std::string dimension;
  ApproachAxis axis = ApproachAxis::kFrontal;
};

/// The shared band formula. Accessibility: [d_a, d_a + tau] with
/// d_a = extent_sum + dim. Clearance: [d_c - tau, d_c] with
/// d_c = extent_sum + dim. d_min is clamped at the extent sum so a band can
/// never require interpenetration.
inline DistanceBand make_distance_band(double extent_sum, double dim_value,
                                       BandRationale rationale, double tau) {
  DistanceBand band;
  band.rationale = rationale;
  band.tau = tau;
  if (rationale == BandRationale::kAccessibility) {
    band.d_min = extent_sum + dim_value;
    band.d_max = band.d_min + tau;
  } else {
    const double d_clearance = extent_sum + dim_value;
    band.d_min = d_clearance - tau;
    band.d_max = d_clearance;
  }
  band.d_min = std::max(band.d_min, extent_sum);
  return band;
}

/// Relation-kind to body-dimension mapping. Shipped as a versioned data file
/// (see data/dimension_map.json); the engine only interprets it.
struct DimensionMap {
  int version = 0;
  std::map<std::string, std::string> rationale;   // relation name -> rationale
  std::map<std::string, std::string> dimensions;  // selection key -> dimension

  BandRationale rationale_for(RelationKind kind) const {
    auto it = rationale.find(to_string(kind));
    if (it == rationale.end()) {
      throw SchemaError(std::string("dimension map has no rationale for relation '") +
                        to_string(kind) + "'");
    }
    if (it->second == "accessibility") return BandRationale::kAccessibility;
    if (it->second == "clearance") return BandRationale::kClearance;
    throw SchemaError("unknown rationale '" + it->second + "' in dimension map");
  }

  /// Resolves the profile dimension for a relation. OperationalClearance
  /// entries are keyed by mode and by the subject's functional class
  /// (seat / openable / default); every other kind is keyed by approach axis.
  std::string dimension_for(RelationKind kind, Mode mode, ApproachAxis axis,
                            const ObjectAsset& subject) const {
    std::string key = to_string(kind);
    if (kind == RelationKind::kOperationalClearance) {
      key += mode == Mode::kPassageOnly ? ".po" : ".ho";
      if (subject.has_openable_part()) {
        key += ".openable";
      } else if (is_seat_category(subject)) {
        key += ".seat";
      } else {
        key += ".default";
      }
    } else {
      key += axis == ApproachAxis::kFrontal ? ".frontal" : ".lateral";
    }
    auto it = dimensions.find(key);
    if (it == dimensions.end()) {
      throw SchemaError("dimension map has no entry for key '" + key + "'");
    }
    return it->second;
  }

  static bool is_seat_category(const ObjectAsset& asset) {
    const std::string& c = asset.category;
    return c.find("chair") != std::string::npos || c.find("stool") != std::string::npos ||
           c.find("sofa") != std::string::npos || c.find("bench") != std::string::npos;
  }
};

/// Derives the center-to-center distance band for one relation between two
/// assets, selecting the governing body dimension through the map.
inline DistanceBand derive_distance_band(RelationKind kind, const ObjectAsset& subject,
                                         const ObjectAsset& object,
                                         const AnthropometricProfile& profile, double tau,
                                         const DimensionMap& map, Mode mode,
                                         ApproachAxis axis = ApproachAxis::kFrontal) {
  if (!is_distance_relation(kind)) {
    throw SchemaError(std::string("relation '") + to_string(kind) +
                      "' does not define a distance band");
  }
  if (tau < 0.0) throw ConfigError("tau must be >= 0");
  const double extent_sum = axis == ApproachAxis::kFrontal
                                ? subject.half_depth() + object.half_depth()
                                : subject.half_width() + object.half_width();
  const std::string dim = map.dimension_for(kind, mode, axis, subject);
  DistanceBand band =
      make_distance_band(extent_sum, profile.dimension(dim), map.rationale_for(kind), tau);
  band.dimension = dim;
  band.axis = axis;
  return band;
}

// ---------------------------------------------------------------------------
// Manipulation space
// ---------------------------------------------------------------------------

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Axis-aligned region in front of an object within which a person operates
/// it. Horizontal extent comes from the object width plus lateral reach on
/// each side and an operational depth; vertical extent equals stature.
struct ManipulationBox {
  Vec3 min;
  Vec3 max;
  /// Set when the asset had no movable-part or seat metadata and the depth
  /// fell back to forward_reach.
  bool used_fallback_depth = false;

  double volume() const {
    return (max.x - min.x) * (max.y - min.y) * (max.z - min.z);
  }
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }
};

/// Builds the manipulation box for a posed asset. The oriented region in
/// front of the asset's front face is computed first, then axis-aligned.
inline ManipulationBox manipulation_box(const ObjectAsset& asset, const Pose& pose,
                                        const AnthropometricProfile& profile) {
  profile.validate();

  double depth_dim = 0.0;
  bool fallback = false;
  if (asset.has_openable_part()) {
    depth_dim = profile.extended_arm_reach;
  } else if (DimensionMap::is_seat_category(asset)) {
    depth_dim = profile.buttock_toe_length;
  } else {
    depth_dim = profile.forward_reach;
    fallback = true;
  }

  const Vec2 front = front_direction(pose);
  const Vec2 lateral = {front.y, -front.x};
  const Vec2 face_center = pose.position() + front * asset.half_depth();
  const double half_span = asset.half_width() + profile.lateral_reach;

  // Corners of the oriented front region, then the AABB of those corners.
  const std::array<Vec2, 4> corners = {
      face_center + lateral * half_span,
      face_center - lateral * half_span,
      face_center + lateral * half_span + front * depth_dim,
      face_center - lateral * half_span + front * depth_dim,
  };
  ManipulationBox box;
  box.min = {corners[0].x, corners[0].y, 0.0};
  box.max = {corners[0].x, corners[0].y, profile.stature};
  for (const Vec2& c : corners) {
    box.min.x = std::min(box.min.x, c.x);
    box.min.y = std::min(box.min.y, c.y);
    box.max.x = std::max(box.max.x, c.x);
    box.max.y = std::max(box.max.y, c.y);
  }
  box.used_fallback_depth = fallback;
  return box;
}

}  // namespace ergo
