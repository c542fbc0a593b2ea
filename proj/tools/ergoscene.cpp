// ergoscene: batch pipeline driver.
//   generate       scene spec -> optimized layout + constraint program dump
//   evaluate       layout [+ trajectories] -> metrics report
//   explain        layout or program dump -> human-readable term table
//   sample-profile percentile table + seed -> anthropometric profile

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ergo/pipeline.hpp"
#include "ergo/remote.hpp"

namespace {

std::string default_data_dir() {
  const char* env = std::getenv("ERGOSCENE_DATA_DIR");
  return env != nullptr ? env : "data";
}

/// Backend settings come from the environment so scripted runs never embed
/// endpoints in argv.
std::unique_ptr<ergo::RemoteBackend> backend_from_env() {
  const char* url = std::getenv("ERGOSCENE_BACKEND_URL");
  if (url == nullptr || *url == '\0') return nullptr;
  ergo::RemoteBackendConfig config;
  config.url = url;
  if (const char* timeout = std::getenv("ERGOSCENE_BACKEND_TIMEOUT_S")) {
    config.timeout_s = std::stod(timeout);
  }
  if (const char* retries = std::getenv("ERGOSCENE_BACKEND_RETRIES")) {
    config.retries = std::stoi(retries);
  }
  return std::make_unique<ergo::RemoteBackend>(config);
}

void print_error(const char* type, const std::string& message) {
  ergo::json j;
  j["error"] = {{"type", type}, {"message", message}};
  std::cerr << j.dump(2) << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"behavior-aware layout generation and evaluation"};
  app.require_subcommand(1);

  // generate ---------------------------------------------------------------
  auto* generate = app.add_subcommand("generate", "optimize a scene into a layout");
  ergo::GenerateOptions gen;
  std::string mode_flag;
  int candidates_flag = -1;
  int iterations_flag = -1;
  generate->add_option("--scene", gen.scene_path, "scene spec JSON")->required();
  generate->add_option("--out", gen.out_path, "layout output path")->required();
  generate->add_option("--mode", mode_flag, "baseline | PO | HO (default: scene file)");
  generate->add_option("--seed", gen.seed, "manifest seed")->default_val(0);
  generate->add_option("--candidates", candidates_flag, "candidate seeds to race");
  generate->add_option("--iterations", iterations_flag, "descent iterations per group");
  generate->add_option("--jobs", gen.jobs, "parallel candidate workers")->default_val(1);
  generate->add_option("--config", gen.config_path, "engine config overrides JSON");
  generate->add_option("--profile", gen.profile_path, "anthropometric profile JSON");
  generate->add_option("--percentiles", gen.percentiles_path,
                       "percentile table JSON (samples a profile with --seed)");
  generate->add_option("--dimension-map", gen.dimension_map_path,
                       "relation -> body dimension map");
  generate->add_option("--lexicon", gen.lexicon_path,
                       "category lexicon for the rule backend");

  // evaluate ---------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "score a layout");
  ergo::EvaluateOptions eval_opt;
  evaluate->add_option("--layout", eval_opt.layout_path, "layout JSON")->required();
  evaluate->add_option("--trajectories", eval_opt.trajectory_paths,
                       "trajectory episode files (JSON or delimited text)");
  evaluate->add_option("--profile", eval_opt.profile_path,
                       "profile for the occupancy section");
  evaluate->add_option("--config", eval_opt.config_path, "engine config overrides JSON");
  evaluate->add_option("--out", eval_opt.out_path, "report output path (default stdout)");

  // explain ----------------------------------------------------------------
  auto* explain = app.add_subcommand("explain", "print the constraint table");
  ergo::ExplainOptions explain_opt;
  explain->add_option("input", explain_opt.input_path, "layout or program dump JSON")
      ->required();
  explain->add_option("--program", explain_opt.program_path,
                      "program dump (when input is a layout without a reference)");

  // sample-profile ---------------------------------------------------------
  auto* sample = app.add_subcommand("sample-profile", "draw a profile from percentiles");
  ergo::SampleProfileOptions sample_opt;
  sample->add_option("--percentiles", sample_opt.percentiles_path, "percentile table")
      ->required();
  sample->add_option("--seed", sample_opt.seed, "sampling seed")->default_val(0);
  sample->add_option("--out", sample_opt.out_path, "profile output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  if (generate->parsed()) {
    gen.mode_override = mode_flag;
    if (candidates_flag > 0) gen.candidates = candidates_flag;
    if (iterations_flag > 0) gen.iterations = iterations_flag;
    if (gen.dimension_map_path.empty()) {
      gen.dimension_map_path = default_data_dir() + "/dimension_map.json";
    }
    if (gen.lexicon_path.empty()) {
      gen.lexicon_path = default_data_dir() + "/category_lexicon.json";
      if (!std::filesystem::exists(gen.lexicon_path)) gen.lexicon_path.clear();
    }
    auto remote = backend_from_env();
    gen.backend = remote.get();
    const ergo::GenerateOutcome outcome = ergo::cmd_generate(gen);
    for (const std::string& w : outcome.warnings) {
      std::cerr << "warning: " << w << "\n";
    }
    std::cout << "layout:  " << outcome.layout_path << "\n"
              << "program: " << outcome.program_path << "\n"
              << "manifest " << ergo::manifest_hash(outcome.manifest) << "\n";
    return 0;
  }
  if (evaluate->parsed()) {
    const ergo::json report = ergo::cmd_evaluate(eval_opt);
    if (eval_opt.out_path.empty()) {
      std::cout << ergo::canonical_dump(report);
    } else {
      std::cout << "report: " << eval_opt.out_path << "\n";
    }
    return 0;
  }
  if (explain->parsed()) {
    std::cout << ergo::cmd_explain(explain_opt);
    return 0;
  }
  if (sample->parsed()) {
    const ergo::json profile = ergo::cmd_sample_profile(sample_opt);
    if (sample_opt.out_path.empty()) {
      std::cout << ergo::canonical_dump(profile);
    } else {
      std::cout << "profile: " << sample_opt.out_path << "\n";
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ergo::ConfigError& e) {
    print_error("config", e.what());
    return 2;
  } catch (const ergo::SchemaError& e) {
    print_error("schema", e.what());
    return 1;
  } catch (const ergo::InfeasibleError& e) {
    print_error("infeasible", e.what());
    return 1;
  } catch (const ergo::BackendError& e) {
    print_error(e.retryable() ? "backend_retryable" : "backend", e.what());
    return 1;
  } catch (const ergo::Error& e) {
    print_error("engine", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
}
