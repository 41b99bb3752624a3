#pragma once

// Seeded multi-run experiments, the scaled-reward metric and Student-t
// confidence intervals.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <span>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "reversedq/agent.hpp"
#include "reversedq/environments.hpp"
#include "reversedq/mdp.hpp"
#include "reversedq/run_result.hpp"

namespace reversedq {

class DegenerateScaleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct ReferenceReturns {
  double oracle;
  double random;
};

/// Exact expected cumulative return over K episodes of the optimal and the
/// uniform-random policy.
inline ReferenceReturns reference_returns(const MdpModel& model, std::size_t episodes) {
  const auto sol = backward_induction(model);
  const double k = static_cast<double>(episodes);
  return {k * evaluate_policy(model, sol.greedy), k * evaluate_uniform_policy(model)};
}

/// 100 * (mean - random) / (oracle - random).
inline double scaled_reward(double mean_cumulative, double oracle, double random) {
  if (!(oracle > random)) throw DegenerateScaleError("scaled_reward: oracle return must exceed random return");
  return 100.0 * (mean_cumulative - random) / (oracle - random);
}

struct ConfidenceInterval {
  double mean;
  double half_width;
};

/// Student-t interval for the mean of independent samples.
inline ConfidenceInterval confidence_interval(std::span<const double> samples, double level = 0.95) {
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("confidence_interval: need at least two samples");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence_interval: level must lie in (0, 1)");
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
  return {mean, t * sd / std::sqrt(static_cast<double>(n))};
}

// ---------------------------------------------------------------------------
// Run specification

struct EnvSpec {
  std::variant<BdclConfig, ChainConfig> config = BdclConfig{};
  /// When false, each BDCL run derives its lock structure from the run seed.
  bool fixed_structure = false;

  std::string name() const { return std::holds_alternative<BdclConfig>(config) ? "bdcl" : "chain"; }
  std::size_t horizon() const {
    return std::visit([](const auto& c) { return c.horizon; }, config);
  }
  std::size_t num_states() const {
    if (const auto* c = std::get_if<ChainConfig>(&config)) return c->num_states;
    return BdclEnv::kNumStates;
  }
  std::size_t num_actions() const {
    if (const auto* b = std::get_if<BdclConfig>(&config)) return b->num_actions;
    return 2;
  }
};

enum class ReferencePolicy { kOracle, kUniformRandom };

inline std::string reference_policy_name(ReferencePolicy p) {
  return p == ReferencePolicy::kOracle ? "oracle" : "random";
}

struct RunSpec {
  EnvSpec env;
  std::variant<AgentConfig, ReferencePolicy> policy = AgentConfig{};
  std::vector<std::uint64_t> seeds;
  std::size_t episodes = 500;
  bool track_regret = false;
  /// 0 means: REVERSEDQ_THREADS if set, else hardware concurrency.
  std::size_t threads = 0;

  std::string policy_name() const {
    if (const auto* c = std::get_if<AgentConfig>(&policy)) return c->name;
    return reference_policy_name(std::get<ReferencePolicy>(policy));
  }

  void validate() const {
    if (episodes < 1) throw std::invalid_argument("RunSpec: episodes must be >= 1");
    if (seeds.empty()) throw std::invalid_argument("RunSpec: need at least one seed");
    auto sorted = seeds;
    std::ranges::sort(sorted);
    if (std::ranges::adjacent_find(sorted) != sorted.end()) throw std::invalid_argument("RunSpec: seeds must be distinct");
  }
};

/// Seeds base, base + 1, ..., base + n - 1.
inline std::vector<std::uint64_t> seed_range(std::uint64_t base, std::size_t n) {
  std::vector<std::uint64_t> seeds(n);
  std::iota(seeds.begin(), seeds.end(), base);
  return seeds;
}

/// Runs `fn(env)` with the concrete environment built for one seed.
template <typename Fn>
decltype(auto) with_environment(const EnvSpec& spec, std::uint64_t seed, Fn&& fn) {
  if (const auto* b = std::get_if<BdclConfig>(&spec.config)) {
    BdclConfig cfg = *b;
    if (!spec.fixed_structure) cfg.structure_seed = derive_seed(seed, "structure");
    return fn(BdclEnv(cfg));
  }
  return fn(ChainEnv(std::get<ChainConfig>(spec.config)));
}

/// Plays a fixed reference policy for K episodes.
template <Environment Env>
RunResult run_reference_policy(const Env& env, ReferencePolicy kind, std::size_t episodes, std::uint64_t seed) {
  const MdpModel model = env.to_model();
  const DeterministicPolicy greedy = backward_induction(model).greedy;
  RunStreams streams(seed);
  RunResult out;
  out.variant = reference_policy_name(kind);
  out.seed = seed;
  for (std::size_t k = 0; k < episodes; ++k) {
    State s = env.initial_state();
    double total = 0.0;
    for (std::size_t h = 0; h < env.horizon(); ++h) {
      const Action a = kind == ReferencePolicy::kOracle ? greedy(h, s) : streams.policy.index(env.num_actions());
      const StepOutcome o = env.step(h, s, a, streams.environment);
      total += o.reward;
      s = o.next;
    }
    out.returns.push_back(total);
  }
  out.finalize();
  return out;
}

/// One seeded run together with the exact per-episode references of the
/// environment instance it ran on.
struct SeedRun {
  RunResult result;
  double oracle_per_episode = 0.0;
  double random_per_episode = 0.0;
};

inline SeedRun run_seed(const RunSpec& spec, std::uint64_t seed) {
  return with_environment(spec.env, seed, [&](const auto& env) {
    SeedRun out;
    const auto refs = reference_returns(env.to_model(), 1);
    out.oracle_per_episode = refs.oracle;
    out.random_per_episode = refs.random;
    if (const auto* agent = std::get_if<AgentConfig>(&spec.policy)) {
      LearningOptions opts;
      opts.track_regret = spec.track_regret;
      out.result = run_learning(env, *agent, spec.episodes, seed, opts).result;
    } else {
      out.result = run_reference_policy(env, std::get<ReferencePolicy>(spec.policy), spec.episodes, seed);
    }
    out.result.env = spec.env.name();
    if constexpr (std::is_same_v<std::decay_t<decltype(env)>, BdclEnv>) out.result.structure_seed = env.config().structure_seed;
    return out;
  });
}

inline std::size_t worker_count(std::size_t requested, std::size_t tasks) {
  std::size_t n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("REVERSEDQ_THREADS")) n = static_cast<std::size_t>(std::strtoull(env, nullptr, 10));
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(tasks, 1));
}

/// Evaluates fn(i) for i in [0, n) on a small worker pool. The first
/// exception thrown by any task is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
  };
  const std::size_t workers = worker_count(threads, n);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

struct Summary {
  std::string variant;
  std::string env;
  std::size_t n_seeds = 0;
  std::size_t episodes = 0;
  /// Scaled mean cumulative reward (%) after the last episode and its 95%
  /// half-width (NaN with a single seed).
  double scaled_mean = 0.0;
  double ci_half_width = 0.0;
  /// Expected per-episode return of the optimal / uniform-random policy.
  double oracle_return = 0.0;
  double random_return = 0.0;
  std::vector<double> curve_mean;        // scaled cumulative reward after episode k
  std::vector<double> curve_half_width;  // NaN with a single seed
  std::vector<double> per_seed_scaled;   // sorted by seed
  std::vector<RunResult> runs;           // sorted by seed
};

/// Per-episode scaled cumulative curve of one run against references that
/// grow linearly with the episode count.
inline std::vector<double> scaled_curve(const RunResult& run, double oracle_per_episode, double random_per_episode) {
  std::vector<double> out(run.cumulative.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double n = static_cast<double>(k + 1);
    out[k] = scaled_reward(run.cumulative[k], n * oracle_per_episode, n * random_per_episode);
  }
  return out;
}

/// Aggregates seeded runs. Input order is irrelevant: runs are sorted by
/// seed before any reduction.
inline Summary summarize(std::vector<SeedRun> runs, std::string variant, std::string env) {
  if (runs.empty()) throw std::invalid_argument("summarize: no runs");
  std::ranges::sort(runs, {}, [](const SeedRun& r) { return r.result.seed; });
  Summary sum;
  sum.variant = std::move(variant);
  sum.env = std::move(env);
  sum.n_seeds = runs.size();
  sum.episodes = runs.front().result.episodes();

  std::vector<std::vector<double>> curves;
  for (const auto& r : runs) {
    if (r.result.episodes() != sum.episodes) throw std::invalid_argument("summarize: runs differ in episode count");
    curves.push_back(scaled_curve(r.result, r.oracle_per_episode, r.random_per_episode));
    sum.per_seed_scaled.push_back(curves.back().back());
    sum.oracle_return += r.oracle_per_episode / static_cast<double>(runs.size());
    sum.random_return += r.random_per_episode / static_cast<double>(runs.size());
  }

  sum.curve_mean.resize(sum.episodes);
  sum.curve_half_width.resize(sum.episodes);
  std::vector<double> column(runs.size());
  for (std::size_t k = 0; k < sum.episodes; ++k) {
    for (std::size_t i = 0; i < runs.size(); ++i) column[i] = curves[i][k];
    if (column.size() >= 2) {
      const auto ci = confidence_interval(column);
      sum.curve_mean[k] = ci.mean;
      sum.curve_half_width[k] = ci.half_width;
    } else {
      sum.curve_mean[k] = column.front();
      sum.curve_half_width[k] = std::nan("");
    }
  }
  sum.scaled_mean = sum.curve_mean.back();
  sum.ci_half_width = sum.curve_half_width.back();
  for (auto& r : runs) sum.runs.push_back(std::move(r.result));
  return sum;
}

inline Summary run_experiment(const RunSpec& spec) {
  spec.validate();
  std::vector<SeedRun> runs(spec.seeds.size());
  parallel_for(spec.seeds.size(), spec.threads, [&](std::size_t i) { runs[i] = run_seed(spec, spec.seeds[i]); });
  return summarize(std::move(runs), spec.policy_name(), spec.env.name());
}

}  // namespace reversedq
