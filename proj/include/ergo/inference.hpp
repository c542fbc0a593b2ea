#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ergo/config.hpp"
#include "ergo/geometry.hpp"
#include "ergo/scene.hpp"
#include "ergo/serialization.hpp"

namespace ergo {

/// Everything an inference backend produces for one scene.
struct InferenceResult {
  std::map<std::string, FunctionalDescription> descriptions;
  std::map<std::string, InteractionPattern> patterns;
  std::vector<SemanticGroup> groups;
  std::vector<Relation> inter_relations;
  /// Conflicting relations detected but, per policy, not resolved.
  std::vector<std::string> conflicts;
};

class InferenceBackend {
 public:
  virtual ~InferenceBackend() = default;
  virtual InferenceResult infer(const std::vector<ObjectAsset>& assets,
                                const Room& room) = 0;
};

// ---------------------------------------------------------------------------
// Category lexicon
// ---------------------------------------------------------------------------

/// Per-category knowledge for the rule backend.
struct LexiconEntry {
  std::string summary;
  bool requires_frontal_access = false;
  bool against_wall = false;
  std::vector<InteractionPattern::Action> actions;
};

/// Relation template instantiated for every matching (subject, object) pair.
/// `group` marks the pair as members of one semantic group.
struct PairRule {
  std::vector<std::string> subject_any;  // category substrings, lowercase
  std::vector<std::string> object_any;
  std::vector<Relation> relations;  // subject/object fields filled at match
  bool group = false;
};

struct CategoryLexicon {
  int version = 0;
  std::map<std::string, LexiconEntry> categories;
  std::vector<PairRule> pair_rules;
};

inline CategoryLexicon lexicon_from_json(const json& j, const std::string& origin) {
  require_schema(j, kLexiconSchema, origin);
  CategoryLexicon lex;
  lex.version = j.value("version", 0);
  if (lex.version < 1) throw SchemaError("'" + origin + "' needs version >= 1");
  std::vector<std::string> violations;
  // Hoist into a local: iterating `temp.items()` would leave the proxy
  // pointing at a destroyed temporary.
  const json categories = j.value("categories", json::object());
  for (const auto& [name, entry] : categories.items()) {
    LexiconEntry e;
    e.summary = entry.value("summary", std::string());
    e.requires_frontal_access = entry.value("requires_frontal_access", false);
    e.against_wall = entry.value("against_wall", false);
    for (const json& a : entry.value("actions", json::array())) {
      if (!a.is_array() || a.size() != 2) {
        violations.push_back("category '" + name + "': action must be [label, confidence]");
        continue;
      }
      e.actions.push_back({a[0].get<std::string>(), a[1].get<double>()});
    }
    lex.categories[name] = std::move(e);
  }
  for (const json& r : j.value("pair_rules", json::array())) {
    PairRule rule;
    rule.subject_any = r.value("subject", std::vector<std::string>{});
    rule.object_any = r.value("object", std::vector<std::string>{});
    rule.group = r.value("group", false);
    if (rule.subject_any.empty() || rule.object_any.empty()) {
      violations.push_back("pair rule needs non-empty subject and object lists");
    }
    for (const json& rel : r.value("relations", json::array())) {
      // Templates carry placeholder ids; real ids are bound at match time.
      json with_ids = rel;
      with_ids["subject"] = "_";
      if (!with_ids.contains("wall")) with_ids["object"] = "_o";
      Relation parsed = relation_from_json(with_ids, &violations);
      parsed.subject.clear();
      parsed.object.clear();
      rule.relations.push_back(std::move(parsed));
    }
    if (rule.relations.empty()) {
      violations.push_back("pair rule needs at least one relation");
    }
    lex.pair_rules.push_back(std::move(rule));
  }
  if (!violations.empty()) throw SchemaError(violations);
  return lex;
}

inline CategoryLexicon load_lexicon(const std::string& path) {
  return lexicon_from_json(parse_json(read_file(path), path), path);
}

namespace detail {

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline bool category_matches(const std::string& category_lc, const std::string& token) {
  return category_lc.find(lowercase(token)) != std::string::npos;
}

inline bool matches_any(const std::string& category_lc,
                        const std::vector<std::string>& tokens) {
  for (const std::string& t : tokens) {
    if (category_matches(category_lc, t)) return true;
  }
  return false;
}

/// Union-find over asset indices.
struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Rule backend
// ---------------------------------------------------------------------------

/// Deterministic inference from the category lexicon: a pure function of
/// (assets, room, lexicon, config). Matching, pairing, and grouping all walk
/// assets in id-sorted order so output never depends on input order.
class RuleBackend : public InferenceBackend {
 public:
  RuleBackend(CategoryLexicon lexicon, EngineConfig config = {})
      : lexicon_(std::move(lexicon)), config_(std::move(config)) {}

  InferenceResult infer(const std::vector<ObjectAsset>& assets,
                        const Room& room) override {
    InferenceResult result;
    std::vector<std::size_t> order(assets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return assets[a].id < assets[b].id;
    });

    std::vector<std::string> lc;
    lc.reserve(assets.size());
    for (const ObjectAsset& a : assets) lc.push_back(detail::lowercase(a.category));

    for (std::size_t i : order) {
      describe(assets[i], lc[i], result);
    }

    // Relation emission: per subject (id order), per rule (file order), bind
    // the nearest matching object (by initial footprint distance when poses
    // exist, else the first in id order).
    struct Emitted {
      Relation relation;
      bool group_pair;
    };
    std::vector<Emitted> emitted;
    std::set<std::string> seen;
    detail::DisjointSet groups_uf(assets.size());

    for (std::size_t si : order) {
      for (const PairRule& rule : lexicon_.pair_rules) {
        if (!detail::matches_any(lc[si], rule.subject_any)) continue;
        long best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t oi : order) {
          if (oi == si) continue;
          if (!detail::matches_any(lc[oi], rule.object_any)) continue;
          double dist = 0.0;
          if (assets[si].initial_pose && assets[oi].initial_pose) {
            dist = footprint_pair_distance(
                assets[si].footprint(*assets[si].initial_pose),
                assets[oi].footprint(*assets[oi].initial_pose));
          }
          if (best < 0 || dist < best_dist) {
            best = static_cast<long>(oi);
            best_dist = dist;
          }
        }
        if (best < 0) continue;
        const std::size_t oi = static_cast<std::size_t>(best);

        bool within_reach = true;
        if (assets[si].initial_pose && assets[oi].initial_pose) {
          within_reach = best_dist <= config_.grouping_proximity_m;
        }
        for (const Relation& tmpl : rule.relations) {
          Relation rel = tmpl;
          rel.subject = assets[si].id;
          if (!rel.targets_wall()) rel.object = assets[oi].id;
          const std::string key = std::string(to_string(rel.kind)) + "|" + rel.subject +
                                  "|" + rel.object;
          if (!seen.insert(key).second) continue;
          emitted.push_back({std::move(rel), rule.group && within_reach});
        }
        if (rule.group && within_reach) groups_uf.unite(si, oi);
      }
    }

    // Wall placement for categories flagged against_wall: nearest wall when
    // an initial pose exists, else round-robin in id order.
    std::size_t wall_cursor = 0;
    for (std::size_t i : order) {
      if (!flag_against_wall(lc[i])) continue;
      int wall = static_cast<int>(wall_cursor++ % 4);
      if (assets[i].initial_pose) {
        const Vec2 p = assets[i].initial_pose->position();
        double best_d = std::numeric_limits<double>::infinity();
        for (int w = 0; w < 4; ++w) {
          const double d = geometry_wall_distance(p, room, w);
          if (d < best_d) {
            best_d = d;
            wall = w;
          }
        }
      }
      Relation rel;
      rel.kind = RelationKind::kAgainstWall;
      rel.subject = assets[i].id;
      rel.wall_index = wall;
      emitted.push_back({std::move(rel), true});
    }

    result.conflicts = find_conflicts(emitted);

    // Assemble groups from the union-find roots; members sorted by id, the
    // group named after its first member.
    std::map<std::size_t, std::vector<std::size_t>> by_root;
    for (std::size_t i : order) by_root[groups_uf.find(i)].push_back(i);
    std::map<std::string, std::size_t> group_of_asset;
    std::vector<SemanticGroup> groups;
    for (auto& [root, members] : by_root) {
      SemanticGroup g;
      for (std::size_t m : members) g.members.push_back(assets[m].id);
      std::sort(g.members.begin(), g.members.end());
      g.group_id = "grp_" + g.members.front();
      for (const std::string& id : g.members) group_of_asset[id] = groups.size();
      groups.push_back(std::move(g));
    }
    std::sort(groups.begin(), groups.end(),
              [](const SemanticGroup& a, const SemanticGroup& b) {
                return a.group_id < b.group_id;
              });
    group_of_asset.clear();
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      for (const std::string& id : groups[gi].members) group_of_asset[id] = gi;
    }

    for (Emitted& e : emitted) {
      const std::size_t sg = group_of_asset.at(e.relation.subject);
      const bool same_group = e.relation.targets_wall() ||
                              group_of_asset.at(e.relation.object) == sg;
      if (same_group) {
        groups[sg].intra_relations.push_back(std::move(e.relation));
      } else {
        result.inter_relations.push_back(std::move(e.relation));
      }
    }
    result.groups = std::move(groups);
    return result;
  }

 private:
  static double geometry_wall_distance(const Vec2& p, const Room& room, int wall) {
    switch (wall) {
      case Room::kSouth: return p.y;
      case Room::kEast: return room.width - p.x;
      case Room::kNorth: return room.depth - p.y;
      default: return p.x;
    }
  }

  /// Longest matching category key wins; ties resolve lexicographically.
  const LexiconEntry* entry_for(const std::string& category_lc) const {
    const LexiconEntry* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& [key, entry] : lexicon_.categories) {
      if (!detail::category_matches(category_lc, key)) continue;
      if (key.size() > best_len) {
        best = &entry;
        best_len = key.size();
      }
    }
    return best;
  }

  bool flag_against_wall(const std::string& category_lc) const {
    const LexiconEntry* e = entry_for(category_lc);
    return e != nullptr && e->against_wall;
  }

  void describe(const ObjectAsset& asset, const std::string& category_lc,
                InferenceResult& result) const {
    FunctionalDescription d;
    d.has_openable_part = asset.has_openable_part();
    d.is_seat = DimensionMap::is_seat_category(asset);
    const LexiconEntry* e = entry_for(category_lc);
    if (e != nullptr) {
      d.summary = e->summary;
      d.requires_frontal_access = e->requires_frontal_access;
      InteractionPattern pattern;
      pattern.top_actions = e->actions;
      std::stable_sort(pattern.top_actions.begin(), pattern.top_actions.end(),
                       [](const auto& a, const auto& b) {
                         return a.confidence > b.confidence;
                       });
      if (pattern.top_actions.size() > 5) pattern.top_actions.resize(5);
      result.patterns[asset.id] = std::move(pattern);
    } else {
      d.summary = "uncataloged " + asset.category;
    }
    result.descriptions[asset.id] = std::move(d);
  }

  template <typename Emitted>
  static std::vector<std::string> find_conflicts(const std::vector<Emitted>& emitted) {
    std::vector<std::string> conflicts;
    // Two AgainstWall targets for one subject, or two distance-bearing kinds
    // on one ordered pair, cannot both be satisfied tightly; report them.
    std::map<std::string, int> wall_of;
    std::map<std::string, std::string> distance_kind_of;
    for (const auto& e : emitted) {
      const Relation& r = e.relation;
      if (r.targets_wall()) {
        auto [it, inserted] = wall_of.try_emplace(r.subject, r.wall_index);
        if (!inserted && it->second != r.wall_index) {
          conflicts.push_back("asset '" + r.subject + "' assigned to walls " +
                              std::to_string(it->second) + " and " +
                              std::to_string(r.wall_index));
        }
      } else if (is_distance_relation(r.kind)) {
        const std::string key = r.subject + "->" + r.object;
        auto [it, inserted] = distance_kind_of.try_emplace(key, to_string(r.kind));
        if (!inserted && it->second != to_string(r.kind)) {
          conflicts.push_back("pair " + key + " carries both " + it->second + " and " +
                              to_string(r.kind));
        }
      }
    }
    return conflicts;
  }

  CategoryLexicon lexicon_;
  EngineConfig config_;
};

// ---------------------------------------------------------------------------
// Backend payload validation (shared by the remote backend and its tests)
// ---------------------------------------------------------------------------

/// Parses and validates a backend response against the wire schema. Either
/// every field parses and every invariant holds, or a SchemaError lists all
/// violations; nothing is partially accepted.
inline InferenceResult validate_backend_payload(const json& payload,
                                                const std::vector<ObjectAsset>& assets) {
  std::vector<std::string> violations;
  InferenceResult result;
  const auto known_asset = [&](const std::string& id) {
    for (const ObjectAsset& a : assets) {
      if (a.id == id) return true;
    }
    return false;
  };

  if (!payload.is_object()) {
    throw SchemaError("backend payload must be a JSON object");
  }

  const json descriptions = payload.value("descriptions", json::object());
  for (const auto& [id, d] : descriptions.items()) {
    if (!known_asset(id)) violations.push_back("description for unknown asset '" + id + "'");
    FunctionalDescription fd;
    fd.summary = d.value("summary", std::string());
    fd.has_openable_part = d.value("has_openable_part", false);
    fd.is_seat = d.value("is_seat", false);
    fd.requires_frontal_access = d.value("requires_frontal_access", false);
    fd.viewing_target = d.value("viewing_target", std::string());
    if (!fd.viewing_target.empty() && !known_asset(fd.viewing_target)) {
      violations.push_back("viewing_target '" + fd.viewing_target + "' unknown");
    }
    result.descriptions[id] = std::move(fd);
  }

  const json patterns = payload.value("patterns", json::object());
  for (const auto& [id, p] : patterns.items()) {
    if (!known_asset(id)) violations.push_back("pattern for unknown asset '" + id + "'");
    InteractionPattern pattern;
    const json actions = p.value("top_actions", json::array());
    if (actions.size() > 5) {
      violations.push_back("asset '" + id + "': top_actions exceeds 5");
    }
    double prev = 1.0;
    for (const json& a : actions) {
      InteractionPattern::Action action;
      action.label = a.value("label", std::string());
      if (action.label.empty()) {
        violations.push_back("asset '" + id + "': action missing label");
      }
      if (!a.contains("confidence") || !a["confidence"].is_number()) {
        violations.push_back("asset '" + id + "': action '" + action.label +
                             "' missing confidence");
      } else {
        action.confidence = a["confidence"].get<double>();
        if (action.confidence < 0.0 || action.confidence > 1.0) {
          violations.push_back("asset '" + id + "': confidence out of [0, 1]");
        }
        if (action.confidence > prev + 1e-12) {
          violations.push_back("asset '" + id + "': confidences must be non-increasing");
        }
        prev = action.confidence;
      }
      pattern.top_actions.push_back(std::move(action));
    }
    result.patterns[id] = std::move(pattern);
  }

  const auto check_relation = [&](const json& r) {
    Relation rel = relation_from_json(r, &violations);
    if (!rel.subject.empty() && !known_asset(rel.subject)) {
      violations.push_back("relation subject '" + rel.subject + "' unknown");
    }
    if (!rel.targets_wall() && !rel.object.empty() && !known_asset(rel.object)) {
      violations.push_back("relation object '" + rel.object + "' unknown");
    }
    return rel;
  };

  std::map<std::string, int> membership;
  for (const json& g : payload.value("groups", json::array())) {
    SemanticGroup group;
    group.group_id = g.value("group_id", std::string());
    if (group.group_id.empty()) violations.push_back("group missing group_id");
    group.members = g.value("members", std::vector<std::string>{});
    if (group.members.empty()) {
      violations.push_back("group '" + group.group_id + "' has no members");
    }
    for (const std::string& m : group.members) {
      if (!known_asset(m)) {
        violations.push_back("group '" + group.group_id + "' member '" + m + "' unknown");
      }
      membership[m] += 1;
    }
    for (const json& r : g.value("relations", json::array())) {
      group.intra_relations.push_back(check_relation(r));
    }
    result.groups.push_back(std::move(group));
  }
  for (const ObjectAsset& a : assets) {
    const auto it = membership.find(a.id);
    if (it == membership.end()) {
      violations.push_back("asset '" + a.id + "' belongs to no group");
    } else if (it->second > 1) {
      violations.push_back("asset '" + a.id + "' belongs to " +
                           std::to_string(it->second) + " groups");
    }
  }
  for (const json& r : payload.value("inter_relations", json::array())) {
    result.inter_relations.push_back(check_relation(r));
  }

  if (!violations.empty()) throw SchemaError(violations);
  return result;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Runs the backend and enforces the output invariants every caller relies
/// on: each asset in exactly one group, all relation endpoints known.
inline InferenceResult infer_relations(const std::vector<ObjectAsset>& assets,
                                       const Room& room, InferenceBackend& backend) {
  InferenceResult result = backend.infer(assets, room);
  std::vector<std::string> violations;
  std::map<std::string, int> membership;
  const auto known_asset = [&](const std::string& id) {
    for (const ObjectAsset& a : assets) {
      if (a.id == id) return true;
    }
    return false;
  };
  for (const SemanticGroup& g : result.groups) {
    for (const std::string& m : g.members) {
      membership[m] += 1;
      if (!known_asset(m)) violations.push_back("group member '" + m + "' unknown");
    }
    for (const Relation& r : g.intra_relations) {
      if (!known_asset(r.subject)) violations.push_back("unknown subject '" + r.subject + "'");
      if (!r.targets_wall() && !known_asset(r.object)) {
        violations.push_back("unknown object '" + r.object + "'");
      }
    }
  }
  for (const ObjectAsset& a : assets) {
    const auto it = membership.find(a.id);
    if (it == membership.end()) violations.push_back("asset '" + a.id + "' ungrouped");
    else if (it->second != 1) violations.push_back("asset '" + a.id + "' multiply grouped");
  }
  for (const Relation& r : result.inter_relations) {
    if (!known_asset(r.subject)) violations.push_back("unknown subject '" + r.subject + "'");
    if (!r.targets_wall() && !known_asset(r.object)) {
      violations.push_back("unknown object '" + r.object + "'");
    }
  }
  if (!violations.empty()) throw SchemaError(violations);
  return result;
}

}  // namespace ergo
