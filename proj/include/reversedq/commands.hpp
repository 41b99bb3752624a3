#pragma once

// The run / report / plot commands behind the command-line tool.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reversedq/experiment_config.hpp"
#include "reversedq/harness.hpp"
#include "reversedq/results_io.hpp"
#include "reversedq/svg_plot.hpp"

namespace reversedq {

inline constexpr std::string_view kManifestFile = "manifest.json";

/// Command-line values that override the config document when set.
struct RunOverrides {
  std::optional<std::string> env;
  std::optional<std::string> algo;
  std::optional<std::size_t> seeds;
  std::optional<std::size_t> episodes;
  std::optional<std::uint64_t> seed_base;
  std::optional<std::string> out;
  std::optional<double> kappa;
  std::optional<std::size_t> ensembles;
  std::optional<double> eta;
  std::optional<double> n0;
  std::optional<double> p_fail;
  std::optional<std::size_t> chain_states;
  std::optional<std::size_t> horizon;
  std::optional<std::uint64_t> structure_seed;
  bool track_regret = false;
};

inline ExperimentConfig merge_overrides(ExperimentConfig cfg, const RunOverrides& o) {
  if (o.env) cfg.env_name = *o.env;
  if (o.algo) cfg.algo = *o.algo;
  if (o.seeds) cfg.seeds = *o.seeds;
  if (o.episodes) cfg.episodes = *o.episodes;
  if (o.seed_base) cfg.seed_base = *o.seed_base;
  if (o.out) cfg.output_dir = *o.out;
  if (o.kappa) apply_agent_override(cfg, "inflation", *o.kappa);
  if (o.ensembles) apply_agent_override(cfg, "ensemble_size", *o.ensembles);
  if (o.eta) apply_agent_override(cfg, "mixing_rate", *o.eta);
  if (o.n0) apply_agent_override(cfg, "prior_transitions", *o.n0);
  if (o.p_fail) cfg.bdcl.fail_probability = *o.p_fail;
  if (o.chain_states) cfg.chain.num_states = *o.chain_states;
  if (o.horizon) cfg.bdcl.horizon = cfg.chain.horizon = *o.horizon;
  if (o.structure_seed) cfg.structure_seed = *o.structure_seed;
  if (o.track_regret) cfg.track_regret = true;
  return cfg;
}

/// A config document that reproduces `cfg` exactly.
inline json config_document(const ExperimentConfig& cfg) {
  const EnvSpec env = cfg.env_spec();
  json params;
  if (cfg.env_name == "bdcl") {
    params = {{"num_actions", cfg.bdcl.num_actions}, {"horizon", cfg.bdcl.horizon}, {"fail_probability", cfg.bdcl.fail_probability}};
    if (cfg.structure_seed) params["structure_seed"] = *cfg.structure_seed;
  } else {
    params = {{"num_states", cfg.chain.num_states},
              {"horizon", cfg.chain.horizon},
              {"success_probability", cfg.chain.success_probability}};
  }
  json overrides = json::object();
  const AgentParams p = resolve(cfg.apply_overrides(AgentConfig{}), env.num_states(), env.num_actions(), env.horizon());
  const json all = agent_params_json(p);
  for (const auto& k : cfg.override_keys) overrides[k] = all.at(k);
  return {{"env", {{"name", cfg.env_name}, {"parameters", params}}},
          {"agent", {{"preset", cfg.algo}, {"overrides", overrides}}},
          {"run",
           {{"seeds", cfg.resolved_seeds()},
            {"seed_base", cfg.seed_base},
            {"episodes", cfg.resolved_episodes()},
            {"output_dir", cfg.output_dir},
            {"track_regret", cfg.track_regret}}}};
}

struct RunOutcome {
  std::vector<Summary> summaries;
  bool complete = true;
  std::string error;
};

/// Runs every selected policy and writes episodes.csv, summary.csv and
/// manifest.json. A failing policy stops the run; whatever finished is
/// still written and the manifest is marked partial.
inline RunOutcome cmd_run(const ExperimentConfig& cfg, std::ostream& log) {
  const auto specs = cfg.run_specs();
  const std::filesystem::path dir = cfg.output_dir;
  RunOutcome outcome;
  json variants = json::array();
  for (const auto& spec : specs) {
    const auto started = std::chrono::steady_clock::now();
    try {
      Summary s = run_experiment(spec);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      log << fmt::format("{:<22} {:>8.2f} ± {:<6.2f} ({} seeds x {} episodes, {:.1f}s)\n", display_name(s.variant),
                         s.scaled_mean, s.ci_half_width, s.n_seeds, s.episodes, secs);
      json v = {{"name", s.variant}, {"wall_seconds", secs}};
      if (const auto* a = std::get_if<AgentConfig>(&spec.policy))
        v["params"] = agent_params_json(resolve(*a, spec.env.num_states(), spec.env.num_actions(), spec.env.horizon()));
      json runs = json::array();
      for (const auto& r : s.runs)
        runs.push_back({{"seed", r.seed}, {"structure_seed", r.structure_seed}, {"wall_seconds", r.wall_seconds}});
      v["runs"] = runs;
      variants.push_back(v);
      outcome.summaries.push_back(std::move(s));
    } catch (const std::exception& e) {
      outcome.complete = false;
      outcome.error = spec.policy_name() + ": " + e.what();
      break;
    }
  }

  write_results(dir, outcome.summaries);
  json manifest = {{"status", outcome.complete ? "complete" : "partial"},
                   {"config", config_document(cfg)},
                   {"environment", env_json(cfg.env_spec())},
                   {"seeds", seed_range(cfg.seed_base, cfg.resolved_seeds())},
                   {"episodes", cfg.resolved_episodes()},
                   {"variants", variants}};
  if (!outcome.complete) manifest["error"] = outcome.error;
  std::ofstream(dir / kManifestFile, std::ios::binary) << manifest.dump(2) << '\n';
  return outcome;
}

inline std::string cmd_report(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / kSummaryFile)) throw ResultsError("no results in " + dir.string());
  return format_report(read_summary(dir));
}

/// Writes one SVG per call. `env` picks the environment when the results
/// directory holds more than one.
inline void cmd_plot(const std::filesystem::path& dir, const std::filesystem::path& out_path,
                     std::optional<std::string> env = std::nullopt) {
  if (!std::filesystem::exists(dir / kEpisodesFile)) throw ResultsError("no episode data in " + dir.string());
  const auto summary = read_summary(dir);
  if (summary.empty()) throw ResultsError("no results in " + dir.string());
  const std::string which = env.value_or(summary.front().env);
  const auto curves = curves_from_rows(read_episodes(dir), summary, which);
  const std::string title = (which == "bdcl" ? std::string("BDCL") : which == "chain" ? std::string("Chain") : which) +
                            ": scaled mean cumulative reward";
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ResultsError("cannot write " + out_path.string());
  out << render_learning_curves(curves, title);
}

}  // namespace reversedq
