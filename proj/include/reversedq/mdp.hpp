#pragma once

// Finite-horizon tabular MDPs and exact dynamic-programming solvers.
//
// Step indices are zero-based throughout the library: an episode visits
// steps 0 .. H-1 and value tables carry one extra terminal row at step H.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace reversedq {

using State = std::size_t;
using Action = std::size_t;

/// Exact tabular finite-horizon MDP with step-dependent dynamics.
class MdpModel {
 public:
  static constexpr double kStochasticTolerance = 1e-12;
  static constexpr double kNormalizeTolerance = 1e-9;

  /// `transition` is laid out as [h][s][a][s'], `reward` as [h][s][a].
  /// Rows within kNormalizeTolerance of summing to one are renormalized;
  /// anything further off is rejected.
  MdpModel(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
           std::vector<double> transition, std::vector<double> reward, State initial_state)
      : S_(num_states),
        A_(num_actions),
        H_(horizon),
        P_(std::move(transition)),
        r_(std::move(reward)),
        s0_(initial_state) {
    if (S_ == 0 || A_ == 0 || H_ == 0) throw std::invalid_argument("MdpModel: dimensions must be positive");
    if (P_.size() != H_ * S_ * A_ * S_) throw std::invalid_argument("MdpModel: transition table has wrong size");
    if (r_.size() != H_ * S_ * A_) throw std::invalid_argument("MdpModel: reward table has wrong size");
    if (s0_ >= S_) throw std::invalid_argument("MdpModel: initial state out of range");
    for (double r : r_)
      if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("MdpModel: reward outside [0, 1]");
    for (std::size_t row = 0; row < H_ * S_ * A_; ++row) {
      auto p = std::span<double>(P_).subspan(row * S_, S_);
      double sum = 0.0;
      for (double x : p) {
        if (!(x >= 0.0)) throw std::invalid_argument("MdpModel: negative transition probability");
        sum += x;
      }
      if (std::abs(sum - 1.0) > kNormalizeTolerance)
        throw std::invalid_argument("MdpModel: transition row sums to " + std::to_string(sum));
      if (std::abs(sum - 1.0) > kStochasticTolerance)
        for (double& x : p) x /= sum;
    }
  }

  std::size_t num_states() const { return S_; }
  std::size_t num_actions() const { return A_; }
  std::size_t horizon() const { return H_; }
  State initial_state() const { return s0_; }

  double reward(std::size_t h, State s, Action a) const { return r_[(h * S_ + s) * A_ + a]; }

  /// Distribution over next states for (h, s, a).
  std::span<const double> transition(std::size_t h, State s, Action a) const {
    return std::span<const double>(P_).subspan(((h * S_ + s) * A_ + a) * S_, S_);
  }

  double transition(std::size_t h, State s, Action a, State next) const { return transition(h, s, a)[next]; }

 private:
  std::size_t S_, A_, H_;
  std::vector<double> P_;
  std::vector<double> r_;
  State s0_;
};

/// Action table pi[h][s] for h in [0, H).
class DeterministicPolicy {
 public:
  DeterministicPolicy(std::size_t horizon, std::size_t num_states, Action fill = 0)
      : S_(num_states), actions_(horizon * num_states, fill) {}

  Action operator()(std::size_t h, State s) const { return actions_[h * S_ + s]; }
  Action& operator()(std::size_t h, State s) { return actions_[h * S_ + s]; }

  std::size_t horizon() const { return S_ == 0 ? 0 : actions_.size() / S_; }
  std::size_t num_states() const { return S_; }

  void validate_for(const MdpModel& model) const {
    if (horizon() != model.horizon() || S_ != model.num_states())
      throw std::invalid_argument("DeterministicPolicy: shape does not match model");
    for (Action a : actions_)
      if (a >= model.num_actions()) throw std::invalid_argument("DeterministicPolicy: action out of range");
  }

  bool operator==(const DeterministicPolicy&) const = default;

 private:
  std::size_t S_;
  std::vector<Action> actions_;
};

struct ValueSolution {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> V;  // [h][s], h in [0, H]
  std::vector<double> Q;  // [h][s][a], h in [0, H)
  DeterministicPolicy greedy{0, 0};

  double value(std::size_t h, State s) const { return V[h * num_states + s]; }
  double q(std::size_t h, State s, Action a) const { return Q[(h * num_states + s) * num_actions + a]; }
};

/// Index of the largest element; ties go to the smallest index.
template <typename Range>
std::size_t argmax_first(const Range& values) {
  std::size_t best = 0;
  std::size_t i = 0;
  for (auto it = std::begin(values); it != std::end(values); ++it, ++i)
    if (*it > *(std::begin(values) + static_cast<std::ptrdiff_t>(best))) best = i;
  return best;
}

namespace detail {
inline double expected_next(const MdpModel& m, std::size_t h, State s, Action a, std::span<const double> next_v) {
  const auto p = m.transition(h, s, a);
  double acc = 0.0;
  for (State n = 0; n < m.num_states(); ++n) acc += p[n] * next_v[n];
  return acc;
}
}  // namespace detail

/// Optimal values, action values and greedy policy by backward recursion.
inline ValueSolution backward_induction(const MdpModel& m) {
  const std::size_t S = m.num_states(), A = m.num_actions(), H = m.horizon();
  ValueSolution sol;
  sol.num_states = S;
  sol.num_actions = A;
  sol.V.assign((H + 1) * S, 0.0);
  sol.Q.assign(H * S * A, 0.0);
  sol.greedy = DeterministicPolicy(H, S);
  for (std::size_t h = H; h-- > 0;) {
    std::span<const double> next_v(sol.V.data() + (h + 1) * S, S);
    for (State s = 0; s < S; ++s) {
      auto q_row = std::span<double>(sol.Q).subspan((h * S + s) * A, A);
      for (Action a = 0; a < A; ++a) q_row[a] = m.reward(h, s, a) + detail::expected_next(m, h, s, a, next_v);
      const Action best = argmax_first(q_row);
      sol.greedy(h, s) = best;
      sol.V[h * S + s] = q_row[best];
    }
  }
  return sol;
}

/// Expected return of a deterministic policy from the initial state.
inline double evaluate_policy(const MdpModel& m, const DeterministicPolicy& policy) {
  policy.validate_for(m);
  const std::size_t S = m.num_states();
  std::vector<double> next(S, 0.0), cur(S, 0.0);
  for (std::size_t h = m.horizon(); h-- > 0;) {
    for (State s = 0; s < S; ++s) {
      const Action a = policy(h, s);
      cur[s] = m.reward(h, s, a) + detail::expected_next(m, h, s, a, next);
    }
    std::swap(cur, next);
  }
  return next[m.initial_state()];
}

/// Expected return of the policy that picks every action with probability 1/A.
inline double evaluate_uniform_policy(const MdpModel& m) {
  const std::size_t S = m.num_states(), A = m.num_actions();
  std::vector<double> next(S, 0.0), cur(S, 0.0);
  for (std::size_t h = m.horizon(); h-- > 0;) {
    for (State s = 0; s < S; ++s) {
      double acc = 0.0;
      for (Action a = 0; a < A; ++a) acc += m.reward(h, s, a) + detail::expected_next(m, h, s, a, next);
      cur[s] = acc / static_cast<double>(A);
    }
    std::swap(cur, next);
  }
  return next[m.initial_state()];
}

/// Sum over episodes of V*_1(s_1) - V^{pi_k}_1(s_1).
inline double regret(const MdpModel& m, std::span<const DeterministicPolicy> episode_policies) {
  const double optimal = backward_induction(m).value(0, m.initial_state());
  double total = 0.0;
  for (const auto& pi : episode_policies) total += std::max(0.0, optimal - evaluate_policy(m, pi));
  return total;
}

/// Per-episode record: path has H + 1 entries, the last holding the state
/// observed after the final step with a placeholder action.
struct Trajectory {
  struct Step {
    State state = 0;
    Action action = 0;
    bool operator==(const Step&) const = default;
  };
  std::vector<Step> path;
  std::vector<double> rewards;

  std::size_t horizon() const { return rewards.size(); }

  bool complete() const { return !rewards.empty() && path.size() == rewards.size() + 1; }
};

}  // namespace reversedq
