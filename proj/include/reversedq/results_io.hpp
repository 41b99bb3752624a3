#pragma once

// Result files: per-episode CSV, summary CSV, and the text report built
// from them. Readers use only the files, never in-memory run state.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "reversedq/agent.hpp"
#include "reversedq/harness.hpp"

namespace reversedq {

inline constexpr std::string_view kEpisodesHeader = "variant,env,seed,episode,episode_return,cumulative_return";
inline constexpr std::string_view kSummaryHeader =
    "variant,env,n_seeds,scaled_mean_pct,ci_half_width_pct,oracle_return,random_return";
inline constexpr std::string_view kEpisodesFile = "episodes.csv";
inline constexpr std::string_view kSummaryFile = "summary.csv";

class ResultsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest text that parses back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  return fmt::format("{}", x);
}

inline double parse_double(std::string_view s) {
  if (s == "nan") return std::nan("");
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ResultsError("bad number '" + std::string(s) + "'");
  return out;
}

inline std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ResultsError("bad integer '" + std::string(s) + "'");
  return out;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline void write_episode_rows(std::ostream& out, const Summary& s) {
  for (const auto& run : s.runs)
    for (std::size_t k = 0; k < run.returns.size(); ++k)
      out << s.variant << ',' << s.env << ',' << run.seed << ',' << (k + 1) << ',' << format_double(run.returns[k])
          << ',' << format_double(run.cumulative[k]) << '\n';
}

inline void write_summary_row(std::ostream& out, const Summary& s) {
  out << s.variant << ',' << s.env << ',' << s.n_seeds << ',' << format_double(s.scaled_mean) << ','
      << format_double(s.ci_half_width) << ',' << format_double(s.oracle_return) << ','
      << format_double(s.random_return) << '\n';
}

/// Writes episodes.csv and summary.csv into `dir`, replacing existing files.
inline void write_results(const std::filesystem::path& dir, const std::vector<Summary>& summaries) {
  std::filesystem::create_directories(dir);
  std::ofstream episodes(dir / kEpisodesFile, std::ios::binary);
  std::ofstream summary(dir / kSummaryFile, std::ios::binary);
  if (!episodes || !summary) throw ResultsError("cannot write results into " + dir.string());
  episodes << kEpisodesHeader << '\n';
  summary << kSummaryHeader << '\n';
  for (const auto& s : summaries) {
    write_episode_rows(episodes, s);
    write_summary_row(summary, s);
  }
  if (!episodes || !summary) throw ResultsError("error while writing results into " + dir.string());
}

struct SummaryRow {
  std::string variant;
  std::string env;
  std::size_t n_seeds = 0;
  double scaled_mean = 0.0;
  double ci_half_width = 0.0;
  double oracle_return = 0.0;
  double random_return = 0.0;
};

struct EpisodeRow {
  std::string variant;
  std::string env;
  std::uint64_t seed = 0;
  std::size_t episode = 0;
  double episode_return = 0.0;
  double cumulative_return = 0.0;
};

namespace detail {
template <typename Row, typename Parse>
std::vector<Row> read_csv(const std::filesystem::path& path, std::string_view header, std::size_t columns, Parse parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResultsError("missing results file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) throw ResultsError("unexpected header in " + path.string());
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != columns)
      throw ResultsError(fmt::format("{}:{}: expected {} fields, got {}", path.string(), line_no, columns, fields.size()));
    try {
      rows.push_back(parse(fields));
    } catch (const ResultsError& e) {
      throw ResultsError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return rows;
}
}  // namespace detail

inline std::vector<SummaryRow> read_summary(const std::filesystem::path& dir) {
  return detail::read_csv<SummaryRow>(dir / kSummaryFile, kSummaryHeader, 7, [](const auto& f) {
    return SummaryRow{std::string(f[0]), std::string(f[1]), static_cast<std::size_t>(parse_u64(f[2])),
                      parse_double(f[3]),  parse_double(f[4]),  parse_double(f[5]),
                      parse_double(f[6])};
  });
}

inline std::vector<EpisodeRow> read_episodes(const std::filesystem::path& dir) {
  return detail::read_csv<EpisodeRow>(dir / kEpisodesFile, kEpisodesHeader, 6, [](const auto& f) {
    return EpisodeRow{std::string(f[0]), std::string(f[1]), parse_u64(f[2]),
                      static_cast<std::size_t>(parse_u64(f[3])), parse_double(f[4]), parse_double(f[5])};
  });
}

/// Display name used in reports and plot legends.
inline std::string display_name(std::string_view variant) {
  if (auto v = parse_variant(variant)) return std::string(variant_label(*v));
  if (variant == "oracle") return "Oracle";
  if (variant == "random") return "Random";
  return std::string(variant);
}

/// Table of scaled mean +- CI per policy, ascending by mean, one block per
/// environment. The ReversedQ row is set in bold.
inline std::string format_report(std::vector<SummaryRow> rows) {
  if (rows.empty()) throw ResultsError("no results");
  std::ranges::stable_sort(rows, [](const SummaryRow& a, const SummaryRow& b) {
    return a.env != b.env ? a.env < b.env : a.scaled_mean < b.scaled_mean;
  });
  std::ostringstream out;
  std::string env;
  for (const auto& r : rows) {
    if (r.env != env) {
      if (!env.empty()) out << '\n';
      env = r.env;
      out << fmt::format("{} Scaled Mean Cumulative Reward with 95% Confidence Intervals\n\n",
                         env == "bdcl" ? "BDCL" : env == "chain" ? "Chain" : env);
      out << "| Policy | Scaled Mean Reward (%) |\n|---|---|\n";
    }
    const std::string ci = std::isnan(r.ci_half_width) ? "n/a" : fmt::format("{:.2f}", r.ci_half_width);
    const bool bold = r.variant == "reversedq";
    const std::string name = display_name(r.variant);
    if (bold)
      out << fmt::format("| **{}** | **{:.2f} ± {}** |\n", name, r.scaled_mean, ci);
    else
      out << fmt::format("| {} | {:.2f} ± {} |\n", name, r.scaled_mean, ci);
  }
  return out.str();
}

}  // namespace reversedq
