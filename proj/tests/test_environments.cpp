#include <gtest/gtest.h>

#include <set>

#include "kernel_check.hpp"
#include "reversedq/environments.hpp"

using namespace reversedq;

namespace {

BdclConfig bdcl_config(double p_fail = 0.02, std::uint64_t structure = 3) {
  BdclConfig c;
  c.fail_probability = p_fail;
  c.structure_seed = structure;
  return c;
}

// Streams whose first Bernoulli(p) draw fails / succeeds.
Rng stream_without_failure(double p) {
  for (std::uint64_t seed = 0;; ++seed) {
    Rng probe(seed);
    if (!probe.bernoulli(p)) return Rng(seed);
  }
}

Rng stream_with_success(double p) {
  for (std::uint64_t seed = 0;; ++seed) {
    Rng probe(seed);
    if (probe.bernoulli(p)) return Rng(seed);
  }
}

}  // namespace

TEST(BdclConfig, Validation) {
  EXPECT_NO_THROW(bdcl_config().validate());
  BdclConfig c = bdcl_config();
  c.num_actions = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = bdcl_config();
  c.horizon = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = bdcl_config(1.0);
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_DOUBLE_EQ(bdcl_config().sink_reward(), 0.025);
  EXPECT_EQ(bdcl_config().route_threshold(), 2u);
}

TEST(Bdcl, StartRoutesByThreshold) {
  const BdclEnv env(bdcl_config());
  Rng rng = stream_without_failure(0.02);
  const auto o = env.step(0, BdclEnv::kStart, 0, rng);
  EXPECT_EQ(o.next, BdclEnv::kLock1);
  EXPECT_EQ(o.reward, 0.0);
  for (Action a = 0; a < 5; ++a) EXPECT_EQ(env.intended_next(0, BdclEnv::kStart, a), a <= 2 ? BdclEnv::kLock1 : BdclEnv::kLock2);
}

TEST(Bdcl, SinkIsAbsorbingAndPaysSinkReward) {
  const BdclEnv env(bdcl_config());
  Rng rng(1);
  for (Action a = 0; a < 5; ++a) {
    const auto o = env.step(2, BdclEnv::kSink, a, rng);
    EXPECT_EQ(o.next, BdclEnv::kSink);
    EXPECT_DOUBLE_EQ(o.reward, 0.025);
  }
}

TEST(Bdcl, TerminalLockRewardKeptUnderFailure) {
  const BdclEnv env(bdcl_config(0.5));
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(env.step(4, BdclEnv::kLock2, 0, rng).reward, 1.0);
    EXPECT_EQ(env.step(4, BdclEnv::kLock1, 3, rng).reward, 0.25);
  }
  EXPECT_EQ(env.reward(3, BdclEnv::kLock2), 0.0);
}

TEST(Bdcl, ProgressActionKeepsLockOthersSink) {
  const BdclEnv env(bdcl_config(0.0));
  for (int lock : {1, 2})
    for (std::size_t h = 1; h + 1 < 5; ++h) {
      const State s = lock == 1 ? BdclEnv::kLock1 : BdclEnv::kLock2;
      for (Action a = 0; a < 5; ++a)
        EXPECT_EQ(env.intended_next(h, s, a), a == env.progress_action(lock, h) ? s : BdclEnv::kSink);
    }
  EXPECT_THROW(env.progress_action(3, 1), std::out_of_range);
  EXPECT_THROW(env.progress_action(1, 4), std::out_of_range);
}

TEST(Bdcl, PlayingProgressActionsReachesLock2) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const BdclEnv env(bdcl_config(0.0, seed));
    Rng rng(seed);
    State s = BdclEnv::kStart;
    double total = 0.0;
    for (std::size_t h = 0; h < 5; ++h) {
      Action a = 4;
      if (h > 0 && h + 1 < 5) a = env.progress_action(2, h);
      const auto o = env.step(h, s, a, rng);
      if (h == 4) EXPECT_EQ(s, BdclEnv::kLock2);
      total += o.reward;
      s = o.next;
    }
    EXPECT_EQ(total, 1.0);
  }
}

TEST(Bdcl, KernelExamples) {
  const BdclEnv env(bdcl_config());
  const auto m = env.to_model();
  const Action prog = env.progress_action(2, 1);
  EXPECT_DOUBLE_EQ(m.transition(1, BdclEnv::kLock2, prog, BdclEnv::kLock2), 0.98);
  EXPECT_DOUBLE_EQ(m.transition(1, BdclEnv::kLock2, prog, BdclEnv::kSink), 0.02);
  EXPECT_DOUBLE_EQ(m.transition(1, BdclEnv::kLock2, (prog + 1) % 5, BdclEnv::kSink), 1.0);
}

TEST(Bdcl, NoFailureKernelIsOneHot) {
  const auto m = BdclEnv(bdcl_config(0.0)).to_model();
  for (std::size_t h = 0; h < 5; ++h)
    for (State s = 0; s < 4; ++s)
      for (Action a = 0; a < 5; ++a) {
        std::size_t ones = 0;
        for (double p : m.transition(h, s, a)) {
          EXPECT_TRUE(p == 0.0 || p == 1.0);
          ones += p == 1.0;
        }
        EXPECT_EQ(ones, 1u);
      }
}

TEST(Bdcl, RewardValuesAreFromTheAllowedSet) {
  const auto m = BdclEnv(bdcl_config()).to_model();
  const std::set<double> allowed = {0.0, 0.025, 0.25, 1.0};
  for (std::size_t h = 0; h < 5; ++h)
    for (State s = 0; s < 4; ++s)
      for (Action a = 0; a < 5; ++a) EXPECT_TRUE(allowed.contains(m.reward(h, s, a)));
}

TEST(Bdcl, StructureSeedDeterminesProgressTable) {
  const BdclEnv a(bdcl_config(0.02, 5)), b(bdcl_config(0.02, 5));
  bool differs = false;
  for (std::uint64_t other = 6; other < 16; ++other) {
    const BdclEnv c(bdcl_config(0.02, other));
    for (int lock : {1, 2})
      for (std::size_t h = 0; h + 1 < 5; ++h) differs = differs || c.progress_action(lock, h) != a.progress_action(lock, h);
  }
  for (int lock : {1, 2})
    for (std::size_t h = 0; h + 1 < 5; ++h) EXPECT_EQ(a.progress_action(lock, h), b.progress_action(lock, h));
  EXPECT_TRUE(differs);
}

TEST(Bdcl, RejectsOutOfRangeStep) {
  const BdclEnv env(bdcl_config());
  Rng rng(1);
  EXPECT_THROW(env.step(5, 0, 0, rng), std::out_of_range);
  EXPECT_THROW(env.step(0, 4, 0, rng), std::out_of_range);
  EXPECT_THROW(env.step(0, 0, 5, rng), std::out_of_range);
}

TEST(Bdcl, StepFrequenciesMatchKernel) {
  const BdclEnv env(bdcl_config(0.1));
  Rng rng(derive_seed(3, "kernel"));
  const auto check = oracle::check_kernel(env, 20000, rng);
  EXPECT_LT(check.worst_z, 4.0);
  EXPECT_TRUE(check.degenerate_ok);
  EXPECT_TRUE(check.rewards_ok);
}

TEST(Chain, InteriorRightSuccess) {
  const ChainEnv env(ChainConfig{});
  Rng rng = stream_with_success(0.9);
  const auto o = env.step(0, 4, ChainEnv::kRight, rng);
  EXPECT_EQ(o.next, 5u);
  EXPECT_EQ(o.reward, 0.0);
}

TEST(Chain, LeftBoundary) {
  const ChainEnv env(ChainConfig{});
  const auto m = env.to_model();
  EXPECT_DOUBLE_EQ(m.transition(0, 0, ChainEnv::kLeft, 0), 0.9);
  EXPECT_DOUBLE_EQ(m.transition(0, 0, ChainEnv::kLeft, 1), 0.1);
  Rng rng(1);
  EXPECT_EQ(env.step(0, 0, ChainEnv::kLeft, rng).reward, 0.05);
}

TEST(Chain, TwoStatesReachEndAtOnce) {
  ChainConfig c;
  c.num_states = 2;
  c.horizon = 3;
  const ChainEnv env(c);
  Rng rng = stream_with_success(0.9);
  const auto o = env.step(0, 0, ChainEnv::kRight, rng);
  EXPECT_EQ(o.next, 1u);
  EXPECT_EQ(env.step(1, o.next, ChainEnv::kLeft, rng).reward, 1.0);
  EXPECT_EQ(env.step(1, o.next, ChainEnv::kRight, rng).reward, 1.0);
}

TEST(Chain, InteriorKernel) {
  const auto m = ChainEnv(ChainConfig{}).to_model();
  EXPECT_DOUBLE_EQ(m.transition(7, 5, ChainEnv::kRight, 6), 0.9);
  EXPECT_NEAR(m.transition(7, 5, ChainEnv::kRight, 4), 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(m.transition(7, 19, ChainEnv::kRight, 19), 0.9);
}

TEST(Chain, RewardValues) {
  const ChainEnv env(ChainConfig{});
  for (State s = 0; s < 20; ++s) {
    const double r = env.reward(s);
    EXPECT_TRUE(r == 0.0 || r == 0.05 || r == 1.0);
  }
  EXPECT_EQ(env.reward(19), 1.0);
}

TEST(Chain, Validation) {
  ChainConfig c;
  c.success_probability = 0.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ChainConfig{};
  c.num_states = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Chain, StepFrequenciesMatchKernel) {
  ChainConfig c;
  c.num_states = 6;
  c.horizon = 3;
  Rng rng(derive_seed(4, "kernel"));
  const auto check = oracle::check_kernel(ChainEnv(c), 20000, rng);
  EXPECT_LT(check.worst_z, 4.0);
  EXPECT_TRUE(check.degenerate_ok);
  EXPECT_TRUE(check.rewards_ok);
}
