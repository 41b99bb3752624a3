#pragma once

// Benchmark environments: the Bidirectional Diabolical Combination Lock
// (BDCL) and the chain MDP. Each environment exposes a generative `step`
// and an exact `to_model` export whose kernel is the law of `step`.

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "reversedq/mdp.hpp"
#include "reversedq/random.hpp"

namespace reversedq {

struct StepOutcome {
  State next;
  double reward;
};

/// Anything the learner can interact with episode by episode.
template <typename E>
concept Environment = requires(const E& env, std::size_t h, State s, Action a, Rng& rng) {
  { env.num_states() } -> std::convertible_to<std::size_t>;
  { env.num_actions() } -> std::convertible_to<std::size_t>;
  { env.horizon() } -> std::convertible_to<std::size_t>;
  { env.initial_state() } -> std::convertible_to<State>;
  { env.step(h, s, a, rng) } -> std::same_as<StepOutcome>;
  { env.to_model() } -> std::same_as<MdpModel>;
};

// ---------------------------------------------------------------------------
// BDCL

struct BdclConfig {
  std::size_t num_actions = 5;
  std::size_t horizon = 5;
  double fail_probability = 0.02;
  double lock1_reward = 0.25;
  double lock2_reward = 1.0;
  std::uint64_t structure_seed = 0;

  double sink_reward() const { return 1.0 / (8.0 * static_cast<double>(horizon)); }

  /// Last action index that routes to Lock 1.
  std::size_t route_threshold() const { return (num_actions - 1) / 2; }

  void validate() const {
    if (num_actions < 2) throw std::invalid_argument("BDCL needs at least 2 actions");
    if (horizon < 2) throw std::invalid_argument("BDCL needs horizon >= 2");
    if (!(fail_probability >= 0.0 && fail_probability < 1.0))
      throw std::invalid_argument("BDCL fail probability must lie in [0, 1)");
    if (!(sink_reward() * static_cast<double>(horizon) < lock1_reward && lock1_reward < lock2_reward &&
          lock2_reward <= 1.0))
      throw std::invalid_argument("BDCL rewards must satisfy H*r_sink < r_l1 < r_l2 <= 1");
  }
};

class BdclEnv {
 public:
  enum : State { kStart = 0, kSink = 1, kLock1 = 2, kLock2 = 3 };
  static constexpr std::size_t kNumStates = 4;

  explicit BdclEnv(BdclConfig config) : config_(config) {
    config_.validate();
    Rng rng = Rng(config_.structure_seed).split("bdcl-progress");
    for (auto& lock : progress_) {
      lock.resize(config_.horizon - 1);
      for (auto& a : lock) a = rng.index(config_.num_actions);
    }
  }

  const BdclConfig& config() const { return config_; }
  std::size_t num_states() const { return kNumStates; }
  std::size_t num_actions() const { return config_.num_actions; }
  std::size_t horizon() const { return config_.horizon; }
  State initial_state() const { return kStart; }

  /// The unique action keeping the agent on `lock` (1 or 2) at step h in [0, H-1).
  Action progress_action(int lock, std::size_t h) const {
    if ((lock != 1 && lock != 2) || h + 1 >= config_.horizon)
      throw std::out_of_range("BDCL progress action index out of range");
    return progress_[static_cast<std::size_t>(lock - 1)][h];
  }

  /// Reward for occupying s at step h; independent of the action.
  double reward(std::size_t h, State s) const {
    switch (s) {
      case kSink:
        return config_.sink_reward();
      case kLock1:
        return h + 1 == config_.horizon ? config_.lock1_reward : 0.0;
      case kLock2:
        return h + 1 == config_.horizon ? config_.lock2_reward : 0.0;
      default:
        return 0.0;
    }
  }

  /// Next state when the failure override does not fire.
  State intended_next(std::size_t h, State s, Action a) const {
    switch (s) {
      case kStart:
        return a <= config_.route_threshold() ? kLock1 : kLock2;
      case kLock1:
      case kLock2:
        if (h + 1 >= config_.horizon) return s;
        return a == progress_action(s == kLock1 ? 1 : 2, h) ? s : kSink;
      default:
        return kSink;
    }
  }

  StepOutcome step(std::size_t h, State s, Action a, Rng& rng) const {
    check(h, s, a);
    const double r = reward(h, s);
    if (rng.bernoulli(config_.fail_probability)) return {kSink, r};
    return {intended_next(h, s, a), r};
  }

  MdpModel to_model() const {
    const std::size_t S = kNumStates, A = num_actions(), H = horizon();
    std::vector<double> P(H * S * A * S, 0.0), R(H * S * A, 0.0);
    for (std::size_t h = 0; h < H; ++h)
      for (State s = 0; s < S; ++s)
        for (Action a = 0; a < A; ++a) {
          const std::size_t row = (h * S + s) * A + a;
          R[row] = reward(h, s);
          P[row * S + intended_next(h, s, a)] += 1.0 - config_.fail_probability;
          P[row * S + kSink] += config_.fail_probability;
        }
    return MdpModel(S, A, H, std::move(P), std::move(R), kStart);
  }

 private:
  void check(std::size_t h, State s, Action a) const {
    if (h >= config_.horizon || s >= kNumStates || a >= config_.num_actions)
      throw std::out_of_range("BDCL step: index out of range");
  }

  BdclConfig config_;
  std::array<std::vector<Action>, 2> progress_;
};

// ---------------------------------------------------------------------------
// Chain

struct ChainConfig {
  std::size_t num_states = 20;
  std::size_t horizon = 50;
  double success_probability = 0.9;
  double start_reward = 0.05;
  double end_reward = 1.0;

  void validate() const {
    if (num_states < 2) throw std::invalid_argument("chain needs at least 2 states");
    if (horizon < 1) throw std::invalid_argument("chain needs horizon >= 1");
    if (!(success_probability > 0.5 && success_probability <= 1.0))
      throw std::invalid_argument("chain success probability must lie in (0.5, 1]");
    if (!(start_reward >= 0.0 && start_reward <= 1.0 && end_reward >= 0.0 && end_reward <= 1.0))
      throw std::invalid_argument("chain rewards must lie in [0, 1]");
  }
};

class ChainEnv {
 public:
  enum : Action { kLeft = 0, kRight = 1 };

  explicit ChainEnv(ChainConfig config) : config_(config) { config_.validate(); }

  const ChainConfig& config() const { return config_; }
  std::size_t num_states() const { return config_.num_states; }
  std::size_t num_actions() const { return 2; }
  std::size_t horizon() const { return config_.horizon; }
  State initial_state() const { return 0; }

  double reward(State s) const {
    if (s == 0) return config_.start_reward;
    if (s + 1 == config_.num_states) return config_.end_reward;
    return 0.0;
  }

  /// Moving past either end leaves the agent in place.
  State shifted(State s, bool right) const {
    if (right) return s + 1 < config_.num_states ? s + 1 : s;
    return s > 0 ? s - 1 : s;
  }

  StepOutcome step(std::size_t h, State s, Action a, Rng& rng) const {
    if (h >= config_.horizon || s >= config_.num_states || a >= 2)
      throw std::out_of_range("chain step: index out of range");
    const bool succeed = rng.bernoulli(config_.success_probability);
    const bool right = (a == kRight) == succeed;
    return {shifted(s, right), reward(s)};
  }

  MdpModel to_model() const {
    const std::size_t S = num_states(), A = 2, H = horizon();
    const double p = config_.success_probability;
    std::vector<double> P(H * S * A * S, 0.0), R(H * S * A, 0.0);
    for (std::size_t h = 0; h < H; ++h)
      for (State s = 0; s < S; ++s)
        for (Action a = 0; a < A; ++a) {
          const std::size_t row = (h * S + s) * A + a;
          R[row] = reward(s);
          P[row * S + shifted(s, a == kRight)] += p;
          P[row * S + shifted(s, a != kRight)] += 1.0 - p;
        }
    return MdpModel(S, A, H, std::move(P), std::move(R), 0);
  }

 private:
  ChainConfig config_;
};

static_assert(Environment<BdclEnv>);
static_assert(Environment<ChainEnv>);

}  // namespace reversedq
