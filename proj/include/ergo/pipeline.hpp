#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ergo/anthropometry.hpp"
#include "ergo/config.hpp"
#include "ergo/constraints.hpp"
#include "ergo/inference.hpp"
#include "ergo/layout.hpp"
#include "ergo/metrics.hpp"
#include "ergo/optimizer.hpp"
#include "ergo/scene.hpp"
#include "ergo/serialization.hpp"

namespace ergo {

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateOptions {
  std::string scene_path;
  std::string out_path;  // layout JSON; the program dump lands next to it
  std::string dimension_map_path;
  std::string lexicon_path;     // needed only when the scene lacks relations
  std::string mode_override;    // empty = take the scene file's mode
  std::string profile_path;     // PO/HO: explicit profile
  std::string percentiles_path; // PO/HO: sample a profile from the table
  std::string config_path;      // optional partial EngineConfig overrides
  std::uint64_t seed = 0;
  int jobs = 1;  // execution knob only; never part of the manifest
  std::optional<int> candidates;
  std::optional<int> iterations;
  /// Optional externally constructed backend (e.g. RemoteBackend). When
  /// null and the scene has no pre-supplied relations, the rule backend is
  /// built from lexicon_path.
  InferenceBackend* backend = nullptr;
};

struct GenerateOutcome {
  SceneLayout layout;
  ConstraintProgram program;
  RunManifest manifest;
  std::string layout_path;
  std::string program_path;
  std::vector<std::string> warnings;
};

namespace detail {

inline void sort_assets_canonically(std::vector<ObjectAsset>& assets) {
  std::sort(assets.begin(), assets.end(),
            [](const ObjectAsset& a, const ObjectAsset& b) { return a.id < b.id; });
}

}  // namespace detail

/// End-to-end generation: ingest, infer (unless bypassed), compile,
/// optimize over candidate seeds, write layout + program dump atomically.
/// Every byte of output is a function of the manifest alone.
inline GenerateOutcome cmd_generate(const GenerateOptions& opt) {
  GenerateOutcome out;
  EngineConfig config;
  if (!opt.config_path.empty()) {
    config = config_from_json(parse_json(read_file(opt.config_path), opt.config_path));
  }
  if (opt.candidates) {
    if (*opt.candidates < 1) throw ConfigError("--candidates must be >= 1");
    config.candidate_count = *opt.candidates;
  }
  if (opt.iterations) {
    if (*opt.iterations < 1) throw ConfigError("--iterations must be >= 1");
    config.iterations = *opt.iterations;
  }

  SceneSpec scene = load_scene_spec(opt.scene_path);
  // Canonical asset order: everything downstream (pose vector layout, term
  // order, rng draws) keys off this, so permuting the input file's asset
  // array cannot change the output.
  detail::sort_assets_canonically(scene.assets);
  const Mode mode =
      opt.mode_override.empty() ? scene.mode : parse_mode(opt.mode_override);

  RunManifest manifest;
  manifest.mode = to_string(mode);
  manifest.seed = opt.seed;
  manifest.scene_path = opt.scene_path;
  manifest.scene_hash = fnv1a_hex(read_file(opt.scene_path));
  manifest.dimension_map_path = opt.dimension_map_path;
  manifest.dimension_map_hash = fnv1a_hex(read_file(opt.dimension_map_path));

  const DimensionMap map = load_dimension_map(opt.dimension_map_path);

  // Profile resolution per mode.
  AnthropometricProfile profile;
  const AnthropometricProfile* profile_ptr = nullptr;
  std::string profile_path = opt.profile_path;
  if (profile_path.empty() && scene.profile_ref) profile_path = *scene.profile_ref;
  if (mode == Mode::kBaseline) {
    if (!profile_path.empty() || !opt.percentiles_path.empty()) {
      out.warnings.push_back("baseline mode ignores the supplied profile");
    }
    manifest.profile_source = "none";
  } else if (!profile_path.empty()) {
    profile = load_profile(profile_path);
    profile_ptr = &profile;
    manifest.profile_source = "file";
    manifest.profile_path = profile_path;
    manifest.profile_hash = fnv1a_hex(read_file(profile_path));
  } else if (!opt.percentiles_path.empty()) {
    profile = sample_profile(load_percentiles(opt.percentiles_path), opt.seed);
    profile_ptr = &profile;
    manifest.profile_source = "sampled";
    manifest.percentiles_path = opt.percentiles_path;
    manifest.percentiles_hash = fnv1a_hex(read_file(opt.percentiles_path));
  } else {
    throw ConfigError("profile required for " + std::string(to_string(mode)) +
                      " mode: pass --profile or --percentiles");
  }

  // Relations: pre-supplied in the scene file, or inferred.
  std::vector<SemanticGroup> groups;
  std::vector<Relation> inter_relations;
  if (scene.groups) {
    groups = *scene.groups;
    if (scene.inter_relations) inter_relations = *scene.inter_relations;
  } else {
    std::unique_ptr<RuleBackend> rule_backend;
    InferenceBackend* backend = opt.backend;
    if (backend == nullptr) {
      if (opt.lexicon_path.empty()) {
        throw ConfigError("scene has no pre-supplied relations; a category lexicon "
                          "(or remote backend) is required");
      }
      manifest.lexicon_path = opt.lexicon_path;
      manifest.lexicon_hash = fnv1a_hex(read_file(opt.lexicon_path));
      rule_backend =
          std::make_unique<RuleBackend>(load_lexicon(opt.lexicon_path), config);
      backend = rule_backend.get();
    }
    InferenceResult inferred = infer_relations(scene.assets, scene.room, *backend);
    groups = std::move(inferred.groups);
    inter_relations = std::move(inferred.inter_relations);
    for (const std::string& c : inferred.conflicts) {
      out.warnings.push_back("relation conflict (unresolved, policy=" +
                             config.conflict_policy + "): " + c);
    }
  }

  manifest.config = config;
  const std::string hash = manifest_hash(manifest);

  out.layout = select_candidate(scene.assets, groups, inter_relations, profile_ptr,
                                scene.room, mode, map, config, opt.seed, opt.jobs);
  out.layout.config_hash = hash;
  out.program = compile(scene.assets, groups, inter_relations, profile_ptr, scene.room,
                        mode, map, config);
  out.manifest = manifest;

  if (!opt.out_path.empty()) {
    namespace fs = std::filesystem;
    const fs::path layout_path(opt.out_path);
    fs::path program_path = layout_path;
    program_path.replace_extension(".program.json");
    out.layout_path = layout_path.string();
    out.program_path = program_path.string();
    atomic_write_file(out.program_path,
                      canonical_dump(program_to_json(out.program, hash)));
    atomic_write_file(
        out.layout_path,
        canonical_dump(layout_to_json(out.layout, manifest,
                                      program_path.filename().string())));
  }
  return out;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOptions {
  std::string layout_path;
  std::vector<std::string> trajectory_paths;
  std::string profile_path;  // enables the occupancy section
  std::string config_path;
  std::string out_path;  // report JSON; empty = caller prints the returned json
  bool write_heatmap = true;
};

/// Computes the metric report for a layout: CF and IB always, behavioral
/// sections when trajectories are supplied. Heatmap images land next to the
/// report as <out>.heatmap.pgm / .grid.
inline json cmd_evaluate(const EvaluateOptions& opt) {
  EngineConfig config;
  if (!opt.config_path.empty()) {
    config = config_from_json(parse_json(read_file(opt.config_path), opt.config_path));
  }
  const SceneLayout layout = load_layout(opt.layout_path);

  json report;
  report["schema"] = kEvaluationSchema;
  if (!layout.config_hash.empty()) report["layout_manifest_hash"] = layout.config_hash;
  report["collision_free"] = collision_free_score(layout);
  report["in_boundary"] = in_boundary_score(layout);

  if (!opt.trajectory_paths.empty()) {
    std::vector<TrajectoryEpisode> episodes;
    for (const std::string& path : opt.trajectory_paths) {
      for (TrajectoryEpisode& e : load_episodes(path)) {
        episodes.push_back(std::move(e));
      }
    }
    report["episodes"] = episodes.size();
    report["distinct_trajectories"] =
        count_distinct_trajectories(episodes, layout, config.detour_proximity_m);

    const HeatmapGrid raw = mean_speed_heatmap(episodes, layout.room, config);
    const HeatmapGrid smooth = smoothed(raw);
    std::size_t visited = 0;
    double max_mean = 0.0;
    for (std::size_t c = 0; c < raw.mean.size(); ++c) {
      if (raw.visited[c]) {
        ++visited;
        max_mean = std::max(max_mean, raw.mean[c]);
      }
    }
    json heat;
    heat["resolution"] = raw.cols;
    heat["visited_cells"] = visited;
    heat["max_mean_speed"] = max_mean;
    if (opt.write_heatmap && !opt.out_path.empty()) {
      namespace fs = std::filesystem;
      fs::path base(opt.out_path);
      base.replace_extension();
      const std::string pgm = base.string() + ".heatmap.pgm";
      const std::string grid = base.string() + ".heatmap.grid";
      atomic_write_file(pgm, heatmap_to_pgm(smooth));
      atomic_write_file(grid, heatmap_to_grid_dump(smooth));
      heat["pgm"] = fs::path(pgm).filename().string();
      heat["grid"] = fs::path(grid).filename().string();
    }
    report["heatmap"] = heat;

    if (!opt.profile_path.empty()) {
      const AnthropometricProfile profile = load_profile(opt.profile_path);
      json occupancy = json::array();
      for (const TrajectoryEpisode& episode : episodes) {
        TrajectoryEpisode with_body = episode;
        if (!with_body.body) {
          with_body.body = BodyDims{profile.body_breadth, profile.body_depth,
                                    profile.stature};
        }
        for (const AssetPlacement& asset : layout.assets) {
          ObjectAsset meta;
          meta.id = asset.id;
          meta.category = asset.category;
          meta.width = 2.0 * asset.half_width;
          meta.depth = 2.0 * asset.half_depth;
          meta.height = asset.height;
          if (asset.openable) meta.movable_parts.push_back({"panel", "pull", 0.0});
          const ManipulationBox box = manipulation_box(meta, asset.pose, profile);
          occupancy.push_back(
              {{"participant", episode.participant},
               {"asset", asset.id},
               {"ratio", volumetric_occupancy_ratio(with_body, box,
                                                    config.occupancy_voxel_m)}});
        }
      }
      report["occupancy"] = occupancy;
    }
  }

  if (!opt.out_path.empty()) {
    atomic_write_file(opt.out_path, canonical_dump(report));
  }
  return report;
}

// ---------------------------------------------------------------------------
// explain
// ---------------------------------------------------------------------------

struct ExplainOptions {
  /// A layout file (whose embedded program_dump reference is followed) or a
  /// program dump directly.
  std::string input_path;
  /// Optional explicit program dump when input_path is a layout.
  std::string program_path;
};

namespace detail {

inline std::string format_number(double v) {
  std::ostringstream ss;
  ss << std::setprecision(6) << v;
  return ss.str();
}

}  // namespace detail

/// Renders the constraint program as a table: one row per term with its
/// parameters, weight, violation at the layout's poses (when a layout is
/// given), and provenance. The printed total matches eval exactly.
inline std::string cmd_explain(const ExplainOptions& opt) {
  const json input = parse_json(read_file(opt.input_path), opt.input_path);
  const std::string schema =
      input.is_object() ? input.value("schema", std::string()) : std::string();

  std::optional<SceneLayout> layout;
  std::string program_path = opt.program_path;
  if (schema == kLayoutSchema) {
    layout = layout_from_json(input, opt.input_path);
    if (program_path.empty()) {
      if (!input.contains("program_dump")) {
        throw ConfigError("layout has no embedded program_dump reference; pass the "
                          "program file explicitly");
      }
      namespace fs = std::filesystem;
      program_path = (fs::path(opt.input_path).parent_path() /
                      input["program_dump"].get<std::string>())
                         .string();
    }
  } else if (schema == kProgramSchema) {
    program_path = opt.input_path;
  } else {
    throw SchemaError("'" + opt.input_path + "' declares schema '" + schema +
                      "'; expected " + kLayoutSchema + " or " + kProgramSchema);
  }
  const ConstraintProgram program = load_program(program_path);

  std::optional<EvalResult> result;
  if (layout) {
    std::vector<double> poses(program.dof_count(), 0.0);
    for (std::size_t i = 0; i < program.asset_ids.size(); ++i) {
      const AssetPlacement* p = layout->find(program.asset_ids[i]);
      if (p == nullptr) {
        throw SchemaError("layout is missing asset '" + program.asset_ids[i] +
                          "' referenced by the program");
      }
      poses[3 * i] = p->pose.x;
      poses[3 * i + 1] = p->pose.y;
      poses[3 * i + 2] = p->pose.yaw;
    }
    result = eval(program, poses);
  }

  std::ostringstream out;
  out << "# kind            subject          object/wall      parameters"
         "                        weight  violation  provenance\n";
  const auto name_of = [&](int idx) -> std::string {
    return idx < 0 ? "-" : program.asset_ids[static_cast<std::size_t>(idx)];
  };
  for (std::size_t t = 0; t < program.terms.size(); ++t) {
    const PenaltyTerm& term = program.terms[t];
    std::string target = name_of(term.object);
    if (term.kind == PenaltyKind::kAgainstWall) {
      target = "wall " + std::to_string(term.wall_index);
    }
    std::string params;
    switch (term.kind) {
      case PenaltyKind::kDistance:
        params = "band [" + detail::format_number(term.band.d_min) + ", " +
                 detail::format_number(term.band.d_max) + "] via " +
                 (term.band.dimension.empty() ? "-" : term.band.dimension);
        break;
      case PenaltyKind::kAlignWith:
      case PenaltyKind::kPointTowards:
        params = "theta " + detail::format_number(term.theta);
        break;
      case PenaltyKind::kOnTopOf:
        params = "height " + detail::format_number(term.height);
        break;
      default:
        params = "-";
        break;
    }
    std::string violation = "-";
    if (result) violation = detail::format_number(result->per_term[t]);
    out << std::left << std::setw(2) << t << ' ' << std::setw(15) << to_string(term.kind)
        << ' ' << std::setw(16) << name_of(term.subject) << ' ' << std::setw(16)
        << target << ' ' << std::setw(33) << params << ' ' << std::setw(7)
        << detail::format_number(term.weight) << ' ' << std::setw(10) << violation
        << ' ' << term.provenance << '\n';
  }
  out << "terms: " << program.terms.size();
  if (result) {
    out << "  total: " << detail::format_number(result->total);
  }
  out << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// sample-profile
// ---------------------------------------------------------------------------

struct SampleProfileOptions {
  std::string percentiles_path;
  std::uint64_t seed = 0;
  std::string out_path;  // empty = caller prints the returned json
};

inline json cmd_sample_profile(const SampleProfileOptions& opt) {
  const PercentileTable table = load_percentiles(opt.percentiles_path);
  const AnthropometricProfile profile = sample_profile(table, opt.seed);
  json j = profile_to_json(profile);
  j["seed"] = opt.seed;
  if (!opt.out_path.empty()) {
    atomic_write_file(opt.out_path, canonical_dump(j));
  }
  return j;
}

}  // namespace ergo
