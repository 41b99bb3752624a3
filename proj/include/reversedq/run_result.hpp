#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace reversedq {

/// Outcome of one seeded run of one policy.
struct RunResult {
  std::string variant;
  std::string env;
  std::uint64_t seed = 0;
  std::uint64_t structure_seed = 0;
  std::vector<double> returns;     // realized return of each episode
  std::vector<double> cumulative;  // running sum of `returns`
  std::vector<double> regret_increments;  // empty unless tracked
  double wall_seconds = 0.0;

  void finalize() {
    cumulative.resize(returns.size());
    std::partial_sum(returns.begin(), returns.end(), cumulative.begin());
  }

  std::size_t episodes() const { return returns.size(); }
  double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

}  // namespace reversedq
