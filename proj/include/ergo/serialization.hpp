#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergo/anthropometry.hpp"
#include "ergo/config.hpp"
#include "ergo/constraints.hpp"
#include "ergo/layout.hpp"
#include "ergo/metrics.hpp"
#include "ergo/scene.hpp"

namespace ergo {

using json = nlohmann::json;

// Schema version tags embedded in every file format.
inline constexpr const char* kSceneSchema = "scene_spec/1";
inline constexpr const char* kProfileSchema = "profile/1";
inline constexpr const char* kPercentilesSchema = "percentiles/1";
inline constexpr const char* kDimensionMapSchema = "dimension_map/1";
inline constexpr const char* kLexiconSchema = "category_lexicon/1";
inline constexpr const char* kLayoutSchema = "layout/1";
inline constexpr const char* kProgramSchema = "program/1";
inline constexpr const char* kTrajectoriesSchema = "trajectories/1";
inline constexpr const char* kManifestSchema = "manifest/1";
inline constexpr const char* kEvaluationSchema = "evaluation/1";
inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes via a temp file in the same directory followed by a rename, so a
/// crashed run never leaves a half-written output behind.
inline void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file '" + tmp.string() + "'");
    out << content;
    if (!out.good()) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

/// Canonical serialization used everywhere an output must be byte-stable:
/// nlohmann::json objects already keep keys sorted, and doubles print with
/// the shortest round-trip representation.
inline std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

inline json parse_json(const std::string& text, const std::string& origin) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw SchemaError("'" + origin + "' is not valid JSON");
  return j;
}

inline void require_schema(const json& j, const std::string& expected,
                           const std::string& origin) {
  if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string() ||
      j["schema"].get<std::string>() != expected) {
    throw SchemaError("'" + origin + "' must declare \"schema\": \"" + expected + "\"");
  }
}

// ---------------------------------------------------------------------------
// Engine config
// ---------------------------------------------------------------------------

inline json to_json(const EngineConfig& c) {
  json j;
  j["tau_accessibility"] = c.tau_accessibility;
  j["tau_clearance"] = c.tau_clearance;
  j["weight_default"] = c.weight_default;
  j["collision_weight_base"] = c.collision_weight_base;
  j["collision_weight_boost"] = c.collision_weight_boost;
  j["overlap_boost_threshold"] = c.overlap_boost_threshold;
  j["baseline_dims"] = c.baseline_dims;
  j["grouping_proximity_m"] = c.grouping_proximity_m;
  j["conflict_policy"] = c.conflict_policy;
  j["iterations"] = c.iterations;
  j["iterations_scope"] = c.iterations_scope;
  j["step_position"] = c.step_position;
  j["step_yaw"] = c.step_yaw;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_epsilon"] = c.adam_epsilon;
  j["candidate_count"] = c.candidate_count;
  j["detour_proximity_m"] = c.detour_proximity_m;
  j["heatmap_sigma_m"] = c.heatmap_sigma_m;
  j["heatmap_resolution"] = c.heatmap_resolution;
  j["occupancy_voxel_m"] = c.occupancy_voxel_m;
  return j;
}

/// Applies a (possibly partial) config object on top of `base`. Unknown
/// keys are an error so typos never silently fall back to defaults.
inline EngineConfig config_from_json(const json& j, EngineConfig base = {}) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "tau_accessibility") base.tau_accessibility = value.get<double>();
    else if (key == "tau_clearance") base.tau_clearance = value.get<double>();
    else if (key == "weight_default") base.weight_default = value.get<double>();
    else if (key == "collision_weight_base") base.collision_weight_base = value.get<double>();
    else if (key == "collision_weight_boost") base.collision_weight_boost = value.get<double>();
    else if (key == "overlap_boost_threshold") base.overlap_boost_threshold = value.get<double>();
    else if (key == "baseline_dims") base.baseline_dims = value.get<std::map<std::string, double>>();
    else if (key == "grouping_proximity_m") base.grouping_proximity_m = value.get<double>();
    else if (key == "conflict_policy") base.conflict_policy = value.get<std::string>();
    else if (key == "iterations") base.iterations = value.get<int>();
    else if (key == "iterations_scope") base.iterations_scope = value.get<std::string>();
    else if (key == "step_position") base.step_position = value.get<double>();
    else if (key == "step_yaw") base.step_yaw = value.get<double>();
    else if (key == "adam_beta1") base.adam_beta1 = value.get<double>();
    else if (key == "adam_beta2") base.adam_beta2 = value.get<double>();
    else if (key == "adam_epsilon") base.adam_epsilon = value.get<double>();
    else if (key == "candidate_count") base.candidate_count = value.get<int>();
    else if (key == "detour_proximity_m") base.detour_proximity_m = value.get<double>();
    else if (key == "heatmap_sigma_m") base.heatmap_sigma_m = value.get<double>();
    else if (key == "heatmap_resolution") base.heatmap_resolution = value.get<int>();
    else if (key == "occupancy_voxel_m") base.occupancy_voxel_m = value.get<double>();
    else if (key == "schema") {/* tolerated so config files can self-describe */}
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return base;
}

// ---------------------------------------------------------------------------
// Relations and scene specs
// ---------------------------------------------------------------------------

inline json relation_to_json(const Relation& r) {
  json j;
  j["kind"] = to_string(r.kind);
  j["subject"] = r.subject;
  if (r.targets_wall()) {
    j["wall"] = r.wall_index;
  } else {
    j["object"] = r.object;
  }
  if (r.theta) j["theta"] = *r.theta;
  if (r.height) j["height"] = *r.height;
  if (r.tau) j["tau"] = *r.tau;
  return j;
}

inline Relation relation_from_json(const json& j, std::vector<std::string>* violations) {
  Relation r;
  const auto fail = [&](const std::string& msg) {
    if (violations) violations->push_back(msg);
    else throw SchemaError(msg);
  };
  if (!j.is_object()) {
    fail("relation must be an object");
    return r;
  }
  const std::string kind_name = j.value("kind", std::string());
  const auto kind = parse_relation_kind(kind_name);
  if (!kind) {
    fail("unknown relation kind '" + kind_name + "'");
    return r;
  }
  r.kind = *kind;
  r.subject = j.value("subject", std::string());
  if (r.subject.empty()) fail("relation missing subject");
  if (r.targets_wall()) {
    if (!j.contains("wall") || !j["wall"].is_number_integer()) {
      fail("against_wall relation missing integer wall index");
    } else {
      r.wall_index = j["wall"].get<int>();
      if (r.wall_index < 0 || r.wall_index > 3) {
        fail("wall index must be in [0, 3]");
      }
    }
  } else {
    r.object = j.value("object", std::string());
    if (r.object.empty()) fail("relation missing object");
    if (!r.subject.empty() && r.subject == r.object) {
      fail("relation subject equals object ('" + r.subject + "')");
    }
  }
  if (j.contains("theta")) r.theta = j["theta"].get<double>();
  if (j.contains("height")) {
    r.height = j["height"].get<double>();
    if (*r.height < 0.0) fail("on_top_of height must be >= 0");
  }
  if (j.contains("tau")) {
    r.tau = j["tau"].get<double>();
    if (*r.tau < 0.0 || *r.tau > 1.0) {
      fail("tau " + std::to_string(*r.tau) + " out of range [0, 1]");
    }
  }
  return r;
}

inline json asset_to_json(const ObjectAsset& a) {
  json j;
  j["id"] = a.id;
  j["category"] = a.category;
  j["width"] = a.width;
  j["depth"] = a.depth;
  j["height"] = a.height;
  if (!a.movable_parts.empty()) {
    json parts = json::array();
    for (const MovablePart& p : a.movable_parts) {
      parts.push_back({{"part", p.part},
                       {"motion_axis", p.motion_axis},
                       {"swing_extent", p.swing_extent}});
    }
    j["movable_parts"] = parts;
  }
  if (!a.image_refs.empty()) j["image_refs"] = a.image_refs;
  if (a.initial_pose) {
    j["pose"] = {{"x", a.initial_pose->x},
                 {"y", a.initial_pose->y},
                 {"yaw", a.initial_pose->yaw},
                 {"z_base", a.initial_pose->z_base}};
  }
  if (a.fixed) j["fixed"] = true;
  return j;
}

inline ObjectAsset asset_from_json(const json& j, std::vector<std::string>& violations) {
  ObjectAsset a;
  if (!j.is_object()) {
    violations.push_back("asset must be an object");
    return a;
  }
  a.id = j.value("id", std::string());
  if (a.id.empty()) violations.push_back("asset missing id");
  a.category = j.value("category", std::string());
  if (a.category.empty()) violations.push_back("asset '" + a.id + "' missing category");
  a.width = j.value("width", 0.0);
  a.depth = j.value("depth", 0.0);
  a.height = j.value("height", 0.0);
  if (!(a.width > 0.0) || !(a.depth > 0.0) || !(a.height > 0.0)) {
    violations.push_back("asset '" + a.id + "' needs positive width/depth/height");
  }
  if (j.contains("movable_parts")) {
    for (const json& p : j["movable_parts"]) {
      MovablePart part;
      part.part = p.value("part", std::string());
      part.motion_axis = p.value("motion_axis", std::string());
      part.swing_extent = p.value("swing_extent", 0.0);
      a.movable_parts.push_back(part);
    }
  }
  if (j.contains("image_refs")) {
    a.image_refs = j["image_refs"].get<std::vector<std::string>>();
  }
  if (j.contains("pose")) {
    const json& p = j["pose"];
    a.initial_pose = Pose{p.value("x", 0.0), p.value("y", 0.0), p.value("yaw", 0.0),
                          p.value("z_base", 0.0)};
  }
  a.fixed = j.value("fixed", false);
  if (a.fixed && !a.initial_pose) {
    violations.push_back("asset '" + a.id + "' is fixed but has no pose");
  }
  return a;
}

inline json room_to_json(const Room& r) {
  return {{"width", r.width}, {"depth", r.depth}, {"height", r.height}};
}

inline Room room_from_json(const json& j, std::vector<std::string>& violations) {
  Room r;
  if (!j.is_object()) {
    violations.push_back("room must be an object");
    return r;
  }
  r.width = j.value("width", 0.0);
  r.depth = j.value("depth", 0.0);
  r.height = j.value("height", 0.0);
  if (!(r.width > 0.0) || !(r.depth > 0.0)) {
    violations.push_back("room needs positive width and depth");
  }
  return r;
}

inline json scene_to_json(const SceneSpec& s) {
  json j;
  j["schema"] = kSceneSchema;
  j["room"] = room_to_json(s.room);
  j["mode"] = to_string(s.mode);
  json assets = json::array();
  for (const ObjectAsset& a : s.assets) assets.push_back(asset_to_json(a));
  j["assets"] = assets;
  if (s.groups) {
    json groups = json::array();
    for (const SemanticGroup& g : *s.groups) {
      json relations = json::array();
      for (const Relation& r : g.intra_relations) relations.push_back(relation_to_json(r));
      groups.push_back({{"group_id", g.group_id},
                        {"members", g.members},
                        {"relations", relations}});
    }
    j["groups"] = groups;
  }
  if (s.inter_relations) {
    json relations = json::array();
    for (const Relation& r : *s.inter_relations) relations.push_back(relation_to_json(r));
    j["inter_relations"] = relations;
  }
  if (s.profile_ref) j["profile"] = *s.profile_ref;
  return j;
}

inline SceneSpec scene_from_json(const json& j, const std::string& origin) {
  require_schema(j, kSceneSchema, origin);
  std::vector<std::string> violations;
  SceneSpec s;
  if (!j.contains("room")) violations.push_back("scene missing room");
  else s.room = room_from_json(j["room"], violations);
  if (j.contains("mode")) {
    try {
      s.mode = parse_mode(j["mode"].get<std::string>());
    } catch (const ConfigError& e) {
      violations.push_back(e.what());
    }
  }
  if (!j.contains("assets") || !j["assets"].is_array() || j["assets"].empty()) {
    violations.push_back("scene needs a non-empty assets array");
  } else {
    for (const json& a : j["assets"]) s.assets.push_back(asset_from_json(a, violations));
    for (std::size_t i = 0; i < s.assets.size(); ++i) {
      for (std::size_t k = i + 1; k < s.assets.size(); ++k) {
        if (s.assets[i].id == s.assets[k].id && !s.assets[i].id.empty()) {
          violations.push_back("duplicate asset id '" + s.assets[i].id + "'");
        }
      }
    }
  }
  if (j.contains("groups")) {
    std::vector<SemanticGroup> groups;
    for (const json& g : j["groups"]) {
      SemanticGroup group;
      group.group_id = g.value("group_id", std::string());
      if (group.group_id.empty()) violations.push_back("group missing group_id");
      if (g.contains("members")) {
        group.members = g["members"].get<std::vector<std::string>>();
      }
      if (group.members.empty()) {
        violations.push_back("group '" + group.group_id + "' has no members");
      }
      if (g.contains("relations")) {
        for (const json& r : g["relations"]) {
          group.intra_relations.push_back(relation_from_json(r, &violations));
        }
      }
      groups.push_back(std::move(group));
    }
    s.groups = std::move(groups);
  }
  if (j.contains("inter_relations")) {
    std::vector<Relation> relations;
    for (const json& r : j["inter_relations"]) {
      relations.push_back(relation_from_json(r, &violations));
    }
    s.inter_relations = std::move(relations);
  }
  if (j.contains("profile")) s.profile_ref = j["profile"].get<std::string>();
  if (!violations.empty()) throw SchemaError(violations);
  return s;
}

inline SceneSpec load_scene_spec(const std::string& path) {
  return scene_from_json(parse_json(read_file(path), path), path);
}

// ---------------------------------------------------------------------------
// Profiles and percentile tables
// ---------------------------------------------------------------------------

inline json profile_to_json(const AnthropometricProfile& p) {
  json dims;
  for (const std::string& name : canonical_dimensions()) {
    dims[name] = p.dimension(name);
  }
  for (const auto& [name, value] : p.extras) dims[name] = value;
  return {{"schema", kProfileSchema}, {"dimensions", dims}};
}

inline AnthropometricProfile profile_from_json(const json& j, const std::string& origin) {
  require_schema(j, kProfileSchema, origin);
  if (!j.contains("dimensions") || !j["dimensions"].is_object()) {
    throw SchemaError("'" + origin + "' missing dimensions object");
  }
  AnthropometricProfile p;
  for (const auto& [name, value] : j["dimensions"].items()) {
    if (!value.is_number()) {
      throw SchemaError("profile dimension '" + name + "' must be a number");
    }
    p.set_dimension(name, value.get<double>());
  }
  p.validate();
  return p;
}

inline AnthropometricProfile load_profile(const std::string& path) {
  return profile_from_json(parse_json(read_file(path), path), path);
}

inline PercentileTable percentiles_from_json(const json& j, const std::string& origin) {
  require_schema(j, kPercentilesSchema, origin);
  if (!j.contains("dimensions") || !j["dimensions"].is_object()) {
    throw SchemaError("'" + origin + "' missing dimensions object");
  }
  PercentileTable t;
  for (const auto& [name, range] : j["dimensions"].items()) {
    PercentileTable::Range r;
    r.p5 = range.value("p5", 0.0);
    r.p95 = range.value("p95", 0.0);
    t.dimensions[name] = r;
  }
  t.validate();
  return t;
}

inline PercentileTable load_percentiles(const std::string& path) {
  return percentiles_from_json(parse_json(read_file(path), path), path);
}

inline DimensionMap dimension_map_from_json(const json& j, const std::string& origin) {
  require_schema(j, kDimensionMapSchema, origin);
  DimensionMap m;
  m.version = j.value("version", 0);
  if (m.version < 1) throw SchemaError("'" + origin + "' needs version >= 1");
  if (!j.contains("rationale") || !j.contains("dimensions")) {
    throw SchemaError("'" + origin + "' needs rationale and dimensions objects");
  }
  m.rationale = j["rationale"].get<std::map<std::string, std::string>>();
  m.dimensions = j["dimensions"].get<std::map<std::string, std::string>>();
  return m;
}

inline DimensionMap load_dimension_map(const std::string& path) {
  return dimension_map_from_json(parse_json(read_file(path), path), path);
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// Everything needed to reconstruct a run. The hash of the canonical
/// manifest JSON is embedded in every output file. Execution-only knobs
/// (--jobs) are deliberately excluded so they cannot change outputs.
struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string scene_path, scene_hash;
  std::string profile_path, profile_hash;
  std::string percentiles_path, percentiles_hash;
  std::string dimension_map_path, dimension_map_hash;
  std::string lexicon_path, lexicon_hash;
  std::string mode = "HO";
  std::string profile_source = "none";  // none | file | sampled
  std::uint64_t seed = 0;
  EngineConfig config;
};

inline json manifest_to_json(const RunManifest& m) {
  json j;
  j["schema"] = kManifestSchema;
  j["tool_version"] = m.tool_version;
  json inputs;
  const auto put = [&](const char* key, const std::string& path, const std::string& hash) {
    if (path.empty()) {
      inputs[key] = nullptr;
    } else {
      inputs[key] = {{"path", path}, {"fnv1a", hash}};
    }
  };
  put("scene", m.scene_path, m.scene_hash);
  put("profile", m.profile_path, m.profile_hash);
  put("percentiles", m.percentiles_path, m.percentiles_hash);
  put("dimension_map", m.dimension_map_path, m.dimension_map_hash);
  put("lexicon", m.lexicon_path, m.lexicon_hash);
  j["inputs"] = inputs;
  j["mode"] = m.mode;
  j["profile_source"] = m.profile_source;
  j["seed"] = m.seed;
  j["config"] = to_json(m.config);
  return j;
}

inline std::string manifest_hash(const RunManifest& m) {
  return fnv1a_hex(canonical_dump(manifest_to_json(m)));
}

// ---------------------------------------------------------------------------
// Layouts
// ---------------------------------------------------------------------------

inline json layout_to_json(const SceneLayout& layout, const RunManifest& manifest,
                           const std::string& program_dump_name) {
  json j;
  j["schema"] = kLayoutSchema;
  j["manifest"] = manifest_to_json(manifest);
  j["manifest_hash"] = manifest_hash(manifest);
  j["room"] = room_to_json(layout.room);
  json assets = json::array();
  for (const AssetPlacement& a : layout.assets) {
    assets.push_back({{"id", a.id},
                      {"category", a.category},
                      {"x", a.pose.x},
                      {"y", a.pose.y},
                      {"z_base", a.pose.z_base},
                      {"yaw", a.pose.yaw},
                      {"half_width", a.half_width},
                      {"half_depth", a.half_depth},
                      {"height", a.height},
                      {"openable", a.openable}});
  }
  j["assets"] = assets;
  json diag;
  diag["seed"] = layout.seed;
  diag["config_hash"] = layout.config_hash;
  diag["total_penalty"] = layout.total_penalty;
  diag["violations"] = layout.final_violations;
  json groups = json::array();
  for (const GroupDiagnostics& g : layout.group_diagnostics) {
    groups.push_back({{"group_id", g.group_id},
                      {"initial_penalty", g.initial_penalty},
                      {"final_penalty", g.final_penalty},
                      {"best_iteration", g.best_iteration}});
  }
  diag["groups"] = groups;
  j["diagnostics"] = diag;
  if (!program_dump_name.empty()) j["program_dump"] = program_dump_name;
  return j;
}

inline SceneLayout layout_from_json(const json& j, const std::string& origin) {
  require_schema(j, kLayoutSchema, origin);
  std::vector<std::string> violations;
  SceneLayout layout;
  if (j.contains("room")) layout.room = room_from_json(j["room"], violations);
  else violations.push_back("layout missing room");
  if (!j.contains("assets") || !j["assets"].is_array()) {
    violations.push_back("layout missing assets array");
  } else {
    for (const json& a : j["assets"]) {
      AssetPlacement p;
      p.id = a.value("id", std::string());
      if (p.id.empty()) violations.push_back("layout asset missing id");
      p.category = a.value("category", std::string());
      p.pose = {a.value("x", 0.0), a.value("y", 0.0), a.value("yaw", 0.0),
                a.value("z_base", 0.0)};
      p.half_width = a.value("half_width", 0.0);
      p.half_depth = a.value("half_depth", 0.0);
      p.height = a.value("height", 0.0);
      p.openable = a.value("openable", false);
      layout.assets.push_back(std::move(p));
    }
  }
  if (j.contains("diagnostics")) {
    const json& d = j["diagnostics"];
    layout.seed = d.value("seed", std::uint64_t{0});
    layout.config_hash = d.value("config_hash", std::string());
    layout.total_penalty = d.value("total_penalty", 0.0);
    if (d.contains("violations")) {
      layout.final_violations = d["violations"].get<std::vector<double>>();
    }
    if (d.contains("groups")) {
      for (const json& g : d["groups"]) {
        layout.group_diagnostics.push_back({g.value("group_id", std::string()),
                                            g.value("initial_penalty", 0.0),
                                            g.value("final_penalty", 0.0),
                                            g.value("best_iteration", 0)});
      }
    }
  }
  if (!violations.empty()) throw SchemaError(violations);
  return layout;
}

inline SceneLayout load_layout(const std::string& path) {
  return layout_from_json(parse_json(read_file(path), path), path);
}

// ---------------------------------------------------------------------------
// Constraint program dumps
// ---------------------------------------------------------------------------

inline json program_to_json(const ConstraintProgram& program,
                            const std::string& manifest_hash_hex) {
  json j;
  j["schema"] = kProgramSchema;
  if (!manifest_hash_hex.empty()) j["manifest_hash"] = manifest_hash_hex;
  j["room"] = room_to_json(program.room);
  j["assets"] = program.asset_ids;
  json shapes = json::array();
  for (const AssetShape& s : program.shapes) {
    shapes.push_back({{"half_width", s.half_width}, {"half_depth", s.half_depth}});
  }
  j["shapes"] = shapes;
  json frozen = json::array();
  for (bool f : program.frozen) frozen.push_back(f);
  j["frozen"] = frozen;
  json terms = json::array();
  for (const PenaltyTerm& t : program.terms) {
    json term;
    term["kind"] = to_string(t.kind);
    term["subject"] = t.subject;
    if (t.object >= 0) term["object"] = t.object;
    if (t.wall_index >= 0) term["wall"] = t.wall_index;
    if (t.kind == PenaltyKind::kDistance) {
      term["band"] = {{"d_min", t.band.d_min},
                      {"d_max", t.band.d_max},
                      {"tau", t.band.tau},
                      {"rationale", to_string(t.band.rationale)},
                      {"dimension", t.band.dimension},
                      {"axis", to_string(t.band.axis)}};
    }
    if (t.kind == PenaltyKind::kAlignWith || t.kind == PenaltyKind::kPointTowards) {
      term["theta"] = t.theta;
    }
    if (t.kind == PenaltyKind::kOnTopOf) term["height"] = t.height;
    term["weight"] = t.weight;
    term["provenance"] = t.provenance;
    terms.push_back(std::move(term));
  }
  j["terms"] = terms;
  return j;
}

inline ConstraintProgram program_from_json(const json& j, const std::string& origin) {
  require_schema(j, kProgramSchema, origin);
  std::vector<std::string> violations;
  ConstraintProgram program;
  program.room = room_from_json(j.value("room", json::object()), violations);
  if (j.contains("assets")) {
    program.asset_ids = j["assets"].get<std::vector<std::string>>();
  } else {
    violations.push_back("program missing assets");
  }
  if (j.contains("shapes")) {
    for (const json& s : j["shapes"]) {
      program.shapes.push_back({s.value("half_width", 0.0), s.value("half_depth", 0.0)});
    }
  }
  if (j.contains("frozen")) {
    for (const json& f : j["frozen"]) program.frozen.push_back(f.get<bool>());
  } else {
    program.frozen.assign(program.asset_ids.size(), false);
  }
  if (program.shapes.size() != program.asset_ids.size() ||
      program.frozen.size() != program.asset_ids.size()) {
    violations.push_back("program shapes/frozen length mismatch");
  }
  for (const json& t : j.value("terms", json::array())) {
    PenaltyTerm term;
    const std::string kind = t.value("kind", std::string());
    if (kind == "distance") term.kind = PenaltyKind::kDistance;
    else if (kind == "against_wall") term.kind = PenaltyKind::kAgainstWall;
    else if (kind == "align_with") term.kind = PenaltyKind::kAlignWith;
    else if (kind == "point_towards") term.kind = PenaltyKind::kPointTowards;
    else if (kind == "on_top_of") term.kind = PenaltyKind::kOnTopOf;
    else if (kind == "collision") term.kind = PenaltyKind::kCollision;
    else if (kind == "boundary") term.kind = PenaltyKind::kBoundary;
    else {
      violations.push_back("unknown penalty kind '" + kind + "'");
      continue;
    }
    term.subject = t.value("subject", -1);
    term.object = t.value("object", -1);
    term.wall_index = t.value("wall", -1);
    if (t.contains("band")) {
      const json& b = t["band"];
      term.band.d_min = b.value("d_min", 0.0);
      term.band.d_max = b.value("d_max", 0.0);
      term.band.tau = b.value("tau", 0.0);
      term.band.rationale = b.value("rationale", std::string()) == "clearance"
                                ? BandRationale::kClearance
                                : BandRationale::kAccessibility;
      term.band.dimension = b.value("dimension", std::string());
      term.band.axis = b.value("axis", std::string()) == "lateral"
                           ? ApproachAxis::kLateral
                           : ApproachAxis::kFrontal;
    }
    term.theta = t.value("theta", 0.0);
    term.height = t.value("height", 0.0);
    term.weight = t.value("weight", 1.0);
    term.provenance = t.value("provenance", std::string());
    const int n = static_cast<int>(program.asset_ids.size());
    if (term.subject < 0 || term.subject >= n ||
        (term.object >= 0 && term.object >= n)) {
      violations.push_back("term pose index out of range");
    }
    program.terms.push_back(std::move(term));
  }
  if (!violations.empty()) throw SchemaError(violations);
  return program;
}

inline ConstraintProgram load_program(const std::string& path) {
  return program_from_json(parse_json(read_file(path), path), path);
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

inline json episodes_to_json(const std::vector<TrajectoryEpisode>& episodes) {
  json j;
  j["schema"] = kTrajectoriesSchema;
  json list = json::array();
  for (const TrajectoryEpisode& e : episodes) {
    json ep;
    ep["participant"] = e.participant;
    ep["fps"] = e.fps;
    if (e.body) {
      ep["body"] = {{"breadth", e.body->breadth},
                    {"depth", e.body->depth},
                    {"stature", e.body->stature}};
    }
    json samples = json::array();
    for (const TrajectorySample& s : e.samples) {
      samples.push_back({s.t, s.position.x, s.position.y, s.position.z});
    }
    ep["samples"] = samples;
    list.push_back(std::move(ep));
  }
  j["episodes"] = list;
  return j;
}

inline std::vector<TrajectoryEpisode> episodes_from_json(const json& j,
                                                         const std::string& origin) {
  require_schema(j, kTrajectoriesSchema, origin);
  std::vector<TrajectoryEpisode> episodes;
  for (const json& ep : j.value("episodes", json::array())) {
    TrajectoryEpisode e;
    e.participant = ep.value("participant", std::string());
    e.fps = ep.value("fps", 0.0);
    if (ep.contains("body")) {
      BodyDims b;
      b.breadth = ep["body"].value("breadth", 0.0);
      b.depth = ep["body"].value("depth", 0.0);
      b.stature = ep["body"].value("stature", 0.0);
      e.body = b;
    }
    for (const json& s : ep.value("samples", json::array())) {
      if (!s.is_array() || s.size() < 3) {
        throw SchemaError("'" + origin + "': each sample must be [t, x, y] or [t, x, y, z]");
      }
      TrajectorySample sample;
      sample.t = s[0].get<double>();
      sample.position = {s[1].get<double>(), s[2].get<double>(),
                         s.size() > 3 ? s[3].get<double>() : 0.0};
      e.samples.push_back(sample);
    }
    e.validate();
    episodes.push_back(std::move(e));
  }
  return episodes;
}

/// Delimited-text episode: `participant,<id>` and `fps,<hz>` header lines,
/// an optional `body,<breadth>,<depth>,<stature>` line, then one
/// `t,x,y[,z]` row per sample. `#` starts a comment. One file = one episode.
inline TrajectoryEpisode episode_from_csv(const std::string& text,
                                          const std::string& origin) {
  TrajectoryEpisode e;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.empty()) continue;
    const auto num = [&](const std::string& s) {
      try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw SchemaError("'" + origin + "' line " + std::to_string(lineno) +
                          ": not a number: '" + s + "'");
      }
    };
    if (fields[0] == "participant" && fields.size() == 2) {
      e.participant = fields[1];
    } else if (fields[0] == "fps" && fields.size() == 2) {
      e.fps = num(fields[1]);
    } else if (fields[0] == "body" && fields.size() == 4) {
      e.body = BodyDims{num(fields[1]), num(fields[2]), num(fields[3])};
    } else if (fields.size() == 3 || fields.size() == 4) {
      TrajectorySample s;
      s.t = num(fields[0]);
      s.position = {num(fields[1]), num(fields[2]),
                    fields.size() == 4 ? num(fields[3]) : 0.0};
      e.samples.push_back(s);
    } else {
      throw SchemaError("'" + origin + "' line " + std::to_string(lineno) +
                        ": unrecognized row");
    }
  }
  e.validate();
  return e;
}

/// Loads trajectory episodes from a .json (possibly multi-episode) or
/// delimited-text file.
inline std::vector<TrajectoryEpisode> load_episodes(const std::string& path) {
  const std::string text = read_file(path);
  if (std::filesystem::path(path).extension() == ".json") {
    return episodes_from_json(parse_json(text, path), path);
  }
  return {episode_from_csv(text, path)};
}

// ---------------------------------------------------------------------------
// Heatmap output
// ---------------------------------------------------------------------------

/// Binary PGM (P5, maxval 255). Never-entered cells map to 0; visited cells
/// map linearly onto [1, 255] so emptiness stays distinguishable. Row 0 is
/// the y = 0 edge of the room.
inline std::string heatmap_to_pgm(const HeatmapGrid& grid) {
  double max_mean = 0.0;
  for (std::size_t c = 0; c < grid.mean.size(); ++c) {
    if (grid.visited[c]) max_mean = std::max(max_mean, grid.mean[c]);
  }
  std::string out = "P5\n" + std::to_string(grid.cols) + " " +
                    std::to_string(grid.rows) + "\n255\n";
  out.reserve(out.size() + grid.mean.size());
  for (int row = 0; row < grid.rows; ++row) {
    for (int col = 0; col < grid.cols; ++col) {
      const std::size_t c = grid.index(row, col);
      unsigned char value = 0;
      if (grid.visited[c]) {
        const double scaled = max_mean > 0.0 ? grid.mean[c] / max_mean : 0.0;
        value = static_cast<unsigned char>(1.5 + scaled * 253.5);
      }
      out.push_back(static_cast<char>(value));
    }
  }
  return out;
}

/// Plain-text raw dump for numeric diffing: a header, then one line per row
/// (row-major from y = 0), cells space-separated, `-` marking never-entered
/// cells.
inline std::string heatmap_to_grid_dump(const HeatmapGrid& grid) {
  std::ostringstream out;
  out << "heatmap/1\n";
  out << "cols " << grid.cols << "\n";
  out << "rows " << grid.rows << "\n";
  json header_nums = {grid.cell_w, grid.cell_h, grid.sigma_m};
  out << "cell_w " << header_nums[0].dump() << "\n";
  out << "cell_h " << header_nums[1].dump() << "\n";
  out << "sigma_m " << header_nums[2].dump() << "\n";
  out << "smoothed " << (grid.smoothed ? 1 : 0) << "\n";
  for (int row = 0; row < grid.rows; ++row) {
    for (int col = 0; col < grid.cols; ++col) {
      if (col > 0) out << ' ';
      const std::size_t c = grid.index(row, col);
      if (grid.visited[c]) {
        out << json(grid.mean[c]).dump();
      } else {
        out << '-';
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace ergo
