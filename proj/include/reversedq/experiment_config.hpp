#pragma once

// Experiment configuration documents (JSON) and their resolution into
// RunSpecs. Missing keys fall back to the benchmark defaults; unknown keys
// are rejected.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reversedq/agent.hpp"
#include "reversedq/environments.hpp"
#include "reversedq/harness.hpp"

namespace reversedq {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string env_name = "bdcl";
  BdclConfig bdcl;
  /// Set when the lock structure is pinned for every run.
  std::optional<std::uint64_t> structure_seed;
  ChainConfig chain;

  /// A preset name, or "all" for the five learner presets.
  std::string algo = "reversedq";
  AgentConfig overrides;  // only fields present in `override_keys` apply
  std::set<std::string> override_keys;

  std::optional<std::size_t> seeds;
  std::uint64_t seed_base = 1;
  std::optional<std::size_t> episodes;
  std::string output_dir = "results";
  bool track_regret = false;

  std::size_t resolved_seeds() const { return seeds.value_or(env_name == "chain" ? 5 : 20); }
  std::size_t resolved_episodes() const { return episodes.value_or(env_name == "chain" ? 1200 : 500); }

  EnvSpec env_spec() const {
    EnvSpec spec;
    if (env_name == "bdcl") {
      BdclConfig c = bdcl;
      if (structure_seed) c.structure_seed = *structure_seed;
      c.validate();
      spec.config = c;
      spec.fixed_structure = structure_seed.has_value();
    } else if (env_name == "chain") {
      chain.validate();
      spec.config = chain;
    } else {
      throw ConfigError("unknown environment '" + env_name + "' (expected bdcl or chain)");
    }
    return spec;
  }

  /// The policies selected by `algo`, with overrides applied.
  std::vector<std::variant<AgentConfig, ReferencePolicy>> policies() const {
    std::vector<std::variant<AgentConfig, ReferencePolicy>> out;
    if (algo == "oracle") return {ReferencePolicy::kOracle};
    if (algo == "random") return {ReferencePolicy::kUniformRandom};
    std::vector<Variant> variants;
    if (algo == "all") {
      variants.assign(kAllVariants.begin(), kAllVariants.end());
    } else if (auto v = parse_variant(algo)) {
      variants.push_back(*v);
    } else {
      throw ConfigError("unknown algorithm '" + algo + "'");
    }
    for (Variant v : variants) out.emplace_back(apply_overrides(preset(v)));
    return out;
  }

  AgentConfig apply_overrides(AgentConfig c) const {
    const auto has = [&](const char* k) { return override_keys.contains(k); };
    if (has("ensemble_size")) c.ensemble_size = overrides.ensemble_size;
    if (has("inflation")) c.inflation = overrides.inflation;
    if (has("prior_transitions")) c.prior_transitions = overrides.prior_transitions;
    if (has("mixing_rate")) c.mixing_rate = overrides.mixing_rate;
    if (has("stage_growth")) c.stage_growth = overrides.stage_growth;
    if (has("pass_direction")) c.pass_direction = overrides.pass_direction;
    if (has("explore_update_timing")) c.explore_update_timing = overrides.explore_update_timing;
    if (has("explore_reset")) c.explore_reset = overrides.explore_reset;
    if (has("init_scale")) c.init_scale = overrides.init_scale;
    if (has("exploit_mix")) c.exploit_mix = overrides.exploit_mix;
    if (has("explore_read_action")) c.explore_read_action = overrides.explore_read_action;
    return c;
  }

  std::vector<RunSpec> run_specs() const {
    std::vector<RunSpec> out;
    const EnvSpec env = env_spec();
    for (auto& policy : policies()) {
      RunSpec spec;
      spec.env = env;
      spec.policy = policy;
      spec.seeds = seed_range(seed_base, resolved_seeds());
      spec.episodes = resolved_episodes();
      spec.track_regret = track_regret;
      spec.validate();
      if (const auto* agent = std::get_if<AgentConfig>(&spec.policy))
        resolve(*agent, env.num_states(), env.num_actions(), env.horizon());
      out.push_back(std::move(spec));
    }
    return out;
  }
};

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_if(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

template <typename Enum>
Enum parse_enum(const json& v, std::initializer_list<std::pair<const char*, Enum>> names, const char* key) {
  const auto s = v.get<std::string>();
  for (const auto& [n, e] : names)
    if (s == n) return e;
  throw ConfigError(std::string("invalid value '") + s + "' for " + key);
}

}  // namespace detail

inline void apply_agent_override(ExperimentConfig& cfg, const std::string& key, const json& v) {
  using detail::parse_enum;
  AgentConfig& o = cfg.overrides;
  if (key == "ensemble_size") o.ensemble_size = v.get<std::size_t>();
  else if (key == "inflation") o.inflation = v.get<double>();
  else if (key == "prior_transitions") o.prior_transitions = v.get<double>();
  else if (key == "mixing_rate") o.mixing_rate = v.get<double>();
  else if (key == "stage_growth") o.stage_growth = v.get<double>();
  else if (key == "init_scale") o.init_scale = v.get<int>();
  else if (key == "pass_direction")
    o.pass_direction = parse_enum<PassDirection>(v, {{"backward", PassDirection::kBackward}, {"forward", PassDirection::kForward}}, "pass_direction");
  else if (key == "explore_update_timing")
    o.explore_update_timing = parse_enum<ExploreUpdateTiming>(
        v, {{"per_step", ExploreUpdateTiming::kPerStep}, {"staged", ExploreUpdateTiming::kStaged}}, "explore_update_timing");
  else if (key == "explore_reset")
    o.explore_reset = parse_enum<ExploreReset>(v, {{"never", ExploreReset::kNever}, {"staged", ExploreReset::kStaged}}, "explore_reset");
  else if (key == "exploit_mix")
    o.exploit_mix = parse_enum<ExploitMix>(v, {{"eta", ExploitMix::kEta}, {"one_minus_eta", ExploitMix::kOneMinusEta}}, "exploit_mix");
  else if (key == "explore_read_action")
    o.explore_read_action = parse_enum<ExploreReadAction>(
        v, {{"a_temp", ExploreReadAction::kGreedy}, {"a_i", ExploreReadAction::kTaken}}, "explore_read_action");
  else
    throw ConfigError("unknown key '" + key + "' in agent.overrides");
  cfg.override_keys.insert(key);
}

inline ExperimentConfig parse_experiment_config(const json& doc) {
  using detail::read_if;
  using detail::reject_unknown;
  ExperimentConfig cfg;
  try {
    reject_unknown(doc, {"env", "agent", "run"}, "config");
    if (doc.contains("env")) {
      const json& env = doc.at("env");
      reject_unknown(env, {"name", "parameters"}, "env");
      read_if(env, "name", cfg.env_name);
      if (env.contains("parameters")) {
        const json& p = env.at("parameters");
        if (cfg.env_name == "bdcl") {
          reject_unknown(p, {"num_actions", "horizon", "fail_probability", "structure_seed"}, "env.parameters");
          read_if(p, "num_actions", cfg.bdcl.num_actions);
          read_if(p, "horizon", cfg.bdcl.horizon);
          read_if(p, "fail_probability", cfg.bdcl.fail_probability);
          if (p.contains("structure_seed")) cfg.structure_seed = p.at("structure_seed").get<std::uint64_t>();
        } else if (cfg.env_name == "chain") {
          reject_unknown(p, {"num_states", "horizon", "success_probability"}, "env.parameters");
          read_if(p, "num_states", cfg.chain.num_states);
          read_if(p, "horizon", cfg.chain.horizon);
          read_if(p, "success_probability", cfg.chain.success_probability);
        } else {
          throw ConfigError("unknown environment '" + cfg.env_name + "'");
        }
      }
    }
    if (doc.contains("agent")) {
      const json& agent = doc.at("agent");
      reject_unknown(agent, {"preset", "overrides"}, "agent");
      read_if(agent, "preset", cfg.algo);
      if (agent.contains("overrides")) {
        if (!agent.at("overrides").is_object()) throw ConfigError("agent.overrides must be an object");
        for (const auto& [k, v] : agent.at("overrides").items()) apply_agent_override(cfg, k, v);
      }
    }
    if (doc.contains("run")) {
      const json& run = doc.at("run");
      reject_unknown(run, {"seeds", "seed_base", "episodes", "output_dir", "track_regret"}, "run");
      if (run.contains("seeds")) cfg.seeds = run.at("seeds").get<std::size_t>();
      read_if(run, "seed_base", cfg.seed_base);
      if (run.contains("episodes")) cfg.episodes = run.at("episodes").get<std::size_t>();
      read_if(run, "output_dir", cfg.output_dir);
      read_if(run, "track_regret", cfg.track_regret);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  return parse_experiment_config(doc);
}

inline json agent_params_json(const AgentParams& p) {
  return {
      {"ensemble_size", p.ensemble_size},
      {"inflation", p.inflation},
      {"prior_transitions", p.prior_transitions},
      {"mixing_rate", p.mixing_rate},
      {"stage_growth", p.stage_growth},
      {"pass_direction", p.pass_direction == PassDirection::kBackward ? "backward" : "forward"},
      {"explore_update_timing", p.explore_update_timing == ExploreUpdateTiming::kPerStep ? "per_step" : "staged"},
      {"explore_reset", p.explore_reset == ExploreReset::kNever ? "never" : "staged"},
      {"init_scale", p.init_scale},
      {"exploit_mix", p.exploit_mix == ExploitMix::kEta ? "eta" : "one_minus_eta"},
      {"explore_read_action", p.explore_read_action == ExploreReadAction::kGreedy ? "a_temp" : "a_i"},
  };
}

inline json env_json(const EnvSpec& env) {
  if (const auto* b = std::get_if<BdclConfig>(&env.config)) {
    json p = {{"num_actions", b->num_actions},
              {"horizon", b->horizon},
              {"fail_probability", b->fail_probability},
              {"lock1_reward", b->lock1_reward},
              {"lock2_reward", b->lock2_reward},
              {"sink_reward", b->sink_reward()}};
    if (env.fixed_structure) p["structure_seed"] = b->structure_seed;
    return {{"name", "bdcl"}, {"parameters", p}};
  }
  const auto& c = std::get<ChainConfig>(env.config);
  return {{"name", "chain"},
          {"parameters",
           {{"num_states", c.num_states},
            {"horizon", c.horizon},
            {"success_probability", c.success_probability},
            {"start_reward", c.start_reward},
            {"end_reward", c.end_reward}}}};
}

}  // namespace reversedq
