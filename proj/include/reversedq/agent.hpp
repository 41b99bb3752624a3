#pragma once

// Tabular posterior-sampling learner with exploit/explore Q ensembles.
//
// One engine covers ReversedQ, the RandomizedQ baseline, and the three
// single-component ablations; the variants differ only in the flag set of
// AgentConfig (see the presets at the bottom of this file).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reversedq/environments.hpp"
#include "reversedq/mdp.hpp"
#include "reversedq/random.hpp"
#include "reversedq/run_result.hpp"

namespace reversedq {

enum class PassDirection { kBackward, kForward };
enum class ExploreUpdateTiming { kPerStep, kStaged };
enum class ExploreReset { kNever, kStaged };
enum class ExploitMix { kEta, kOneMinusEta };
/// Which action the explore-table assignment reads from the selected ensemble member.
enum class ExploreReadAction { kGreedy, kTaken };

struct AgentConfig {
  std::string name = "reversedq";

  std::size_t ensemble_size = 10;
  double inflation = 1.0;
  /// Defaults to 1/S when unset.
  std::optional<double> prior_transitions;
  /// Defaults to 1/(sqrt(H) + 1) when unset.
  std::optional<double> mixing_rate;
  /// Defaults to 1 + 1/H when unset.
  std::optional<double> stage_growth;

  PassDirection pass_direction = PassDirection::kBackward;
  ExploreUpdateTiming explore_update_timing = ExploreUpdateTiming::kPerStep;
  ExploreReset explore_reset = ExploreReset::kNever;
  int init_scale = 1;
  ExploitMix exploit_mix = ExploitMix::kEta;
  ExploreReadAction explore_read_action = ExploreReadAction::kGreedy;
};

/// AgentConfig with every default filled in for a concrete problem size.
struct AgentParams {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t horizon = 0;
  std::size_t ensemble_size = 0;
  double inflation = 0.0;
  double prior_transitions = 0.0;
  double mixing_rate = 0.0;
  double stage_growth = 0.0;
  PassDirection pass_direction{};
  ExploreUpdateTiming explore_update_timing{};
  ExploreReset explore_reset{};
  int init_scale = 1;
  ExploitMix exploit_mix{};
  ExploreReadAction explore_read_action{};

  bool staged() const {
    return explore_update_timing == ExploreUpdateTiming::kStaged || explore_reset == ExploreReset::kStaged;
  }
  double exploit_coefficient() const { return exploit_mix == ExploitMix::kEta ? mixing_rate : 1.0 - mixing_rate; }

  bool operator==(const AgentParams&) const = default;
};

inline double default_mixing_rate(std::size_t horizon) {
  return 1.0 / (std::sqrt(static_cast<double>(horizon)) + 1.0);
}

inline AgentParams resolve(const AgentConfig& c, std::size_t S, std::size_t A, std::size_t H) {
  if (S == 0 || A == 0 || H == 0) throw std::invalid_argument("agent: problem dimensions must be positive");
  AgentParams p;
  p.num_states = S;
  p.num_actions = A;
  p.horizon = H;
  p.ensemble_size = c.ensemble_size;
  p.inflation = c.inflation;
  p.prior_transitions = c.prior_transitions.value_or(1.0 / static_cast<double>(S));
  p.mixing_rate = c.mixing_rate.value_or(default_mixing_rate(H));
  p.stage_growth = c.stage_growth.value_or(1.0 + 1.0 / static_cast<double>(H));
  p.pass_direction = c.pass_direction;
  p.explore_update_timing = c.explore_update_timing;
  p.explore_reset = c.explore_reset;
  p.init_scale = c.init_scale;
  p.exploit_mix = c.exploit_mix;
  p.explore_read_action = c.explore_read_action;

  if (p.ensemble_size < 1) throw std::invalid_argument("agent: ensemble size must be >= 1");
  if (!(p.inflation > 0.0)) throw std::invalid_argument("agent: inflation must be positive");
  if (!(p.prior_transitions > 0.0)) throw std::invalid_argument("agent: prior transitions must be positive");
  if (!(p.mixing_rate > 0.0 && p.mixing_rate <= 0.5)) throw std::invalid_argument("agent: mixing rate must lie in (0, 1/2]");
  if (!(p.stage_growth > 1.0)) throw std::invalid_argument("agent: stage growth must exceed 1");
  if (p.init_scale != 1 && p.init_scale != 2) throw std::invalid_argument("agent: init scale must be 1 or 2");
  return p;
}

/// Every table the learner keeps. Ensemble tables are laid out
/// [h][s][a][j] so the per-entry max over members is contiguous.
struct LearnerState {
  AgentParams params;
  std::vector<double> init_value;      // V0[h], h in [0, H]
  std::vector<double> policy_q;        // Q[h][s][a]
  std::vector<double> explore_q;       // explore Q[h][s][a]
  std::vector<double> exploit_ens;     // exploit ensemble [h][s][a][j]
  std::vector<double> explore_ens;     // explore ensemble [h][s][a][j]
  std::vector<double> exploit_v;       // exploit V[h][s], h in [0, H]
  std::vector<double> explore_v;       // explore V[h][s], h in [0, H]
  std::vector<std::uint64_t> visits;   // N[h][s][a]
  std::vector<std::uint64_t> stage_next;  // staged variants only

  std::size_t sa(std::size_t h, State s, Action a) const {
    return (h * params.num_states + s) * params.num_actions + a;
  }
  std::size_t hs(std::size_t h, State s) const { return h * params.num_states + s; }

  std::span<const double> policy_row(std::size_t h, State s) const {
    return std::span<const double>(policy_q).subspan(sa(h, s, 0), params.num_actions);
  }
  std::span<double> exploit_members(std::size_t h, State s, Action a) {
    return std::span<double>(exploit_ens).subspan(sa(h, s, a) * params.ensemble_size, params.ensemble_size);
  }
  std::span<double> explore_members(std::size_t h, State s, Action a) {
    return std::span<double>(explore_ens).subspan(sa(h, s, a) * params.ensemble_size, params.ensemble_size);
  }
  std::span<const double> exploit_members(std::size_t h, State s, Action a) const {
    return std::span<const double>(exploit_ens).subspan(sa(h, s, a) * params.ensemble_size, params.ensemble_size);
  }
  std::span<const double> explore_members(std::size_t h, State s, Action a) const {
    return std::span<const double>(explore_ens).subspan(sa(h, s, a) * params.ensemble_size, params.ensemble_size);
  }

  /// Upper bound every table entry must respect.
  double value_bound() const { return init_value.front(); }

  bool operator==(const LearnerState&) const = default;
};

inline LearnerState init_state(const AgentParams& p) {
  const std::size_t S = p.num_states, A = p.num_actions, H = p.horizon, J = p.ensemble_size;
  LearnerState st;
  st.params = p;
  st.init_value.resize(H + 1);
  for (std::size_t h = 0; h <= H; ++h) st.init_value[h] = p.init_scale * static_cast<double>(H - h);

  st.policy_q.resize(H * S * A);
  st.explore_q.resize(H * S * A);
  st.exploit_ens.resize(H * S * A * J);
  st.explore_ens.resize(H * S * A * J);
  st.exploit_v.resize((H + 1) * S);
  st.explore_v.resize((H + 1) * S);
  for (std::size_t h = 0; h <= H; ++h)
    for (State s = 0; s < S; ++s) st.exploit_v[st.hs(h, s)] = st.explore_v[st.hs(h, s)] = st.init_value[h];
  for (std::size_t h = 0; h < H; ++h) {
    const double q0 = st.init_value[h + 1];
    for (State s = 0; s < S; ++s)
      for (Action a = 0; a < A; ++a) {
        st.policy_q[st.sa(h, s, a)] = st.explore_q[st.sa(h, s, a)] = q0;
        std::ranges::fill(st.exploit_members(h, s, a), q0);
        std::ranges::fill(st.explore_members(h, s, a), q0);
      }
  }
  st.visits.assign(H * S * A, 0);
  st.stage_next.assign(H * S * A, 1);
  return st;
}

inline LearnerState init_state(const AgentConfig& c, std::size_t S, std::size_t A, std::size_t H) {
  return init_state(resolve(c, S, A, H));
}

/// Greedy action of the policy table, smallest index on ties.
inline Action select_action(const LearnerState& st, std::size_t h, State s) {
  return argmax_first(st.policy_row(h, s));
}

inline DeterministicPolicy greedy_policy(const LearnerState& st) {
  DeterministicPolicy pi(st.params.horizon, st.params.num_states);
  for (std::size_t h = 0; h < st.params.horizon; ++h)
    for (State s = 0; s < st.params.num_states; ++s) pi(h, s) = select_action(st, h, s);
  return pi;
}

struct MixWeights {
  double exploit;
  double explore;
};

/// Exploit weight ~ Beta((H+1)/k, (N+n0)/k); explore weight ~ Beta(1/k, (N+n0)/k).
inline MixWeights sample_mix_weights(std::uint64_t visits, const AgentParams& p, Rng& rng) {
  const double k = p.inflation;
  const double tail = (static_cast<double>(visits) + p.prior_transitions) / k;
  const double exploit = beta_sample((static_cast<double>(p.horizon) + 1.0) / k, tail, rng);
  const double explore = beta_sample(1.0 / k, tail, rng);
  return {exploit, explore};
}

inline double convex_mix(double old_value, double target, double weight) {
  return (1.0 - weight) * old_value + weight * target;
}

/// Mixes member j of both ensembles at (h, s, a) toward its one-step target.
inline void ensemble_update(LearnerState& st, std::size_t j, std::size_t h, State s, Action a, double reward,
                            State next, Rng& rng) {
  const MixWeights w = sample_mix_weights(st.visits[st.sa(h, s, a)], st.params, rng);
  auto& tilde = st.exploit_members(h, s, a)[j];
  auto& breve = st.explore_members(h, s, a)[j];
  tilde = convex_mix(tilde, reward + st.exploit_v[st.hs(h + 1, next)], w.exploit);
  breve = convex_mix(breve, reward + st.explore_v[st.hs(h + 1, next)], w.explore);
}

/// Value-table refresh, policy-table update and visit count for one
/// transition, after every ensemble member has been mixed.
inline void value_and_policy_update(LearnerState& st, std::size_t h, State s, Action a) {
  const AgentParams& p = st.params;
  const std::size_t idx = st.sa(h, s, a);

  const Action a_greedy = select_action(st, h, s);
  const auto explore_here = st.explore_members(h, s, a);
  const std::size_t j_best = argmax_first(explore_here);

  const auto exploit_greedy = st.exploit_members(h, s, a_greedy);
  st.exploit_v[st.hs(h, s)] = std::min(st.init_value[h], *std::ranges::max_element(exploit_greedy));

  const bool crossing = p.staged() && st.visits[idx] + 1 >= st.stage_next[idx];
  if (p.explore_update_timing == ExploreUpdateTiming::kPerStep || crossing) {
    const Action read = p.explore_read_action == ExploreReadAction::kGreedy ? a_greedy : a;
    st.explore_q[idx] = st.explore_members(h, s, read)[j_best];
    const auto row = std::span<const double>(st.explore_q).subspan(st.sa(h, s, 0), p.num_actions);
    st.explore_v[st.hs(h, s)] = *std::ranges::max_element(row);
  }

  const auto exploit_taken = st.exploit_members(h, s, a);
  const double candidate =
      p.exploit_coefficient() * *std::ranges::max_element(exploit_taken) + p.mixing_rate * st.explore_q[idx];
  st.policy_q[idx] = std::min(st.policy_q[idx], candidate);

  ++st.visits[idx];

  if (crossing) {
    if (p.explore_reset == ExploreReset::kStaged) std::ranges::fill(st.explore_members(h, s, a), st.init_value[h + 1]);
    const auto grown = static_cast<std::uint64_t>(std::ceil(p.stage_growth * static_cast<double>(st.stage_next[idx])));
    st.stage_next[idx] = std::max(st.stage_next[idx] + 1, grown);
  }
}

/// All updates for one observed transition at step h.
inline void process_transition(LearnerState& st, std::size_t h, State s, Action a, double reward, State next,
                               Rng& rng) {
  for (std::size_t j = 0; j < st.params.ensemble_size; ++j) ensemble_update(st, j, h, s, a, reward, next, rng);
  value_and_policy_update(st, h, s, a);
}

/// Applies a finished episode in the configured pass direction.
inline void process_episode(LearnerState& st, const Trajectory& traj, Rng& rng) {
  const std::size_t H = st.params.horizon;
  if (!traj.complete() || traj.horizon() != H) throw std::invalid_argument("process_episode: incomplete trajectory");
  auto apply = [&](std::size_t i) {
    process_transition(st, i, traj.path[i].state, traj.path[i].action, traj.rewards[i], traj.path[i + 1].state, rng);
  };
  if (st.params.pass_direction == PassDirection::kBackward) {
    for (std::size_t i = H; i-- > 0;) apply(i);
  } else {
    for (std::size_t i = 0; i < H; ++i) apply(i);
  }
}

// ---------------------------------------------------------------------------
// Presets

enum class Variant { kReversedQ, kRandomizedQ, kRandomizedQBackward, kRandomizedQUpdate, kRandomizedQInit };

inline constexpr std::array<Variant, 5> kAllVariants = {Variant::kRandomizedQ, Variant::kRandomizedQBackward,
                                                        Variant::kRandomizedQInit, Variant::kRandomizedQUpdate,
                                                        Variant::kReversedQ};

inline std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kReversedQ: return "reversedq";
    case Variant::kRandomizedQ: return "randomizedq";
    case Variant::kRandomizedQBackward: return "randomizedq-backward";
    case Variant::kRandomizedQUpdate: return "randomizedq-update";
    case Variant::kRandomizedQInit: return "randomizedq-init";
  }
  return "?";
}

inline std::string_view variant_label(Variant v) {
  switch (v) {
    case Variant::kReversedQ: return "ReversedQ";
    case Variant::kRandomizedQ: return "RandomizedQ";
    case Variant::kRandomizedQBackward: return "RandomizedQ-Backward";
    case Variant::kRandomizedQUpdate: return "RandomizedQ-Update";
    case Variant::kRandomizedQInit: return "RandomizedQ-Init";
  }
  return "?";
}

inline std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : kAllVariants)
    if (variant_name(v) == name) return v;
  return std::nullopt;
}

inline AgentConfig preset(Variant v) {
  AgentConfig c;
  c.name = std::string(variant_name(v));
  if (v == Variant::kReversedQ) return c;

  // RandomizedQ reconstruction: forward pass, staged explore refresh and
  // reset, doubled initial values, (1 - eta) exploit weight.
  c.pass_direction = PassDirection::kForward;
  c.explore_update_timing = ExploreUpdateTiming::kStaged;
  c.explore_reset = ExploreReset::kStaged;
  c.init_scale = 2;
  c.exploit_mix = ExploitMix::kOneMinusEta;
  switch (v) {
    case Variant::kRandomizedQBackward:
      c.pass_direction = PassDirection::kBackward;
      break;
    case Variant::kRandomizedQUpdate:
      c.explore_update_timing = ExploreUpdateTiming::kPerStep;
      c.explore_reset = ExploreReset::kNever;
      c.exploit_mix = ExploitMix::kEta;
      break;
    case Variant::kRandomizedQInit:
      c.init_scale = 1;
      break;
    default:
      break;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Learning loop

struct LearningOptions {
  /// Record V*(s1) - V^{pi_k}(s1) for the greedy snapshot at each episode start.
  bool track_regret = false;
  /// Optional per-episode hook, called after the episode's updates.
  std::function<void(std::size_t episode, const LearnerState&)> on_episode;
};

struct LearningRun {
  RunResult result;
  LearnerState state;
};

/// Seeds the three named streams a learning run draws from.
struct RunStreams {
  Rng environment;
  Rng agent;
  Rng policy;

  explicit RunStreams(std::uint64_t seed)
      : environment(Rng(seed).split("environment")), agent(Rng(seed).split("agent")), policy(Rng(seed).split("policy")) {}
};

template <Environment Env>
LearningRun run_learning(const Env& env, const AgentConfig& config, std::size_t episodes, std::uint64_t seed,
                         const LearningOptions& options = {}) {
  if (episodes < 1) throw std::invalid_argument("run_learning: need at least one episode");
  const auto started = std::chrono::steady_clock::now();
  const std::size_t H = env.horizon();
  LearnerState st = init_state(config, env.num_states(), env.num_actions(), H);
  RunStreams streams(seed);

  std::optional<MdpModel> model;
  double optimal = 0.0;
  if (options.track_regret) {
    model.emplace(env.to_model());
    optimal = backward_induction(*model).value(0, model->initial_state());
  }

  RunResult out;
  out.variant = config.name;
  out.seed = seed;
  out.returns.reserve(episodes);
  const bool forward = st.params.pass_direction == PassDirection::kForward;

  Trajectory traj;
  for (std::size_t k = 0; k < episodes; ++k) {
    if (model) out.regret_increments.push_back(std::max(0.0, optimal - evaluate_policy(*model, greedy_policy(st))));
    traj.path.clear();
    traj.rewards.clear();
    State s = env.initial_state();
    double total = 0.0;
    for (std::size_t h = 0; h < H; ++h) {
      const Action a = select_action(st, h, s);
      const StepOutcome o = env.step(h, s, a, streams.environment);
      traj.path.push_back({s, a});
      traj.rewards.push_back(o.reward);
      total += o.reward;
      if (forward) process_transition(st, h, s, a, o.reward, o.next, streams.agent);
      s = o.next;
    }
    traj.path.push_back({s, 0});
    if (!forward) process_episode(st, traj, streams.agent);
    out.returns.push_back(total);
    if (options.on_episode) options.on_episode(k, st);
  }
  out.finalize();
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(out), std::move(st)};
}

}  // namespace reversedq
