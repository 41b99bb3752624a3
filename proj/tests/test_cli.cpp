#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "reversedq/commands.hpp"

using namespace reversedq;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("reversedq_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config(const std::string& env, const std::string& algo, const fs::path& out,
                              std::size_t seeds = 3, std::size_t episodes = 30) {
  ExperimentConfig cfg;
  cfg.env_name = env;
  cfg.algo = algo;
  cfg.seeds = seeds;
  cfg.episodes = episodes;
  cfg.output_dir = out.string();
  return cfg;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Config, DefaultsFollowBenchmarkSettings) {
  const auto bdcl = parse_experiment_config(json::object());
  EXPECT_EQ(bdcl.env_name, "bdcl");
  EXPECT_EQ(bdcl.resolved_seeds(), 20u);
  EXPECT_EQ(bdcl.resolved_episodes(), 500u);
  EXPECT_EQ(bdcl.algo, "reversedq");
  const auto chain = parse_experiment_config(json::parse(R"({"env": {"name": "chain"}})"));
  EXPECT_EQ(chain.resolved_seeds(), 5u);
  EXPECT_EQ(chain.resolved_episodes(), 1200u);
  EXPECT_EQ(chain.env_spec().num_states(), 20u);
  EXPECT_EQ(chain.env_spec().horizon(), 50u);
}

TEST(Config, ParsesAllSections) {
  const auto cfg = parse_experiment_config(json::parse(R"({
    "env": {"name": "bdcl", "parameters": {"num_actions": 4, "horizon": 6, "fail_probability": 0.05, "structure_seed": 9}},
    "agent": {"preset": "randomizedq-init", "overrides": {"ensemble_size": 3, "inflation": 2, "explore_read_action": "a_i"}},
    "run": {"seeds": 4, "seed_base": 100, "episodes": 12, "output_dir": "out", "track_regret": true}
  })"));
  EXPECT_EQ(cfg.bdcl.num_actions, 4u);
  EXPECT_EQ(cfg.bdcl.horizon, 6u);
  EXPECT_EQ(cfg.structure_seed, 9u);
  EXPECT_TRUE(cfg.env_spec().fixed_structure);
  const auto specs = cfg.run_specs();
  ASSERT_EQ(specs.size(), 1u);
  const auto& agent = std::get<AgentConfig>(specs[0].policy);
  EXPECT_EQ(agent.name, "randomizedq-init");
  EXPECT_EQ(agent.ensemble_size, 3u);
  EXPECT_EQ(agent.inflation, 2.0);
  EXPECT_EQ(agent.explore_read_action, ExploreReadAction::kTaken);
  EXPECT_EQ(agent.init_scale, 1);
  EXPECT_EQ(specs[0].seeds, (std::vector<std::uint64_t>{100, 101, 102, 103}));
  EXPECT_EQ(specs[0].episodes, 12u);
  EXPECT_TRUE(specs[0].track_regret);
}

TEST(Config, RejectsUnknownKeys) {
  for (const char* doc : {R"({"extra": 1})", R"({"env": {"name": "bdcl", "size": 3}})",
                          R"({"env": {"name": "bdcl", "parameters": {"num_states": 3}}})",
                          R"({"env": {"name": "chain", "parameters": {"num_actions": 3}}})",
                          R"({"agent": {"overrides": {"temperature": 1}}})", R"({"run": {"threads": 2}})",
                          R"({"agent": {"overrides": {"pass_direction": "sideways"}}})",
                          R"({"run": {"seeds": "many"}})", R"({"env": {"name": "grid", "parameters": {}}})"})
    EXPECT_THROW(parse_experiment_config(json::parse(doc)), ConfigError) << doc;
}

TEST(Config, RejectsInvalidSelections) {
  ExperimentConfig cfg;
  cfg.algo = "ucb";
  EXPECT_THROW(cfg.run_specs(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.env_name = "grid";
  EXPECT_THROW(cfg.run_specs(), ConfigError);
  cfg = ExperimentConfig{};
  apply_agent_override(cfg, "mixing_rate", 0.9);
  EXPECT_THROW(cfg.run_specs(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.bdcl.fail_probability = 1.5;
  EXPECT_THROW(cfg.run_specs(), std::invalid_argument);
}

TEST(Config, AlgoSelection) {
  ExperimentConfig cfg;
  cfg.algo = "all";
  const auto all = cfg.run_specs();
  ASSERT_EQ(all.size(), 5u);
  std::vector<std::string> names;
  for (const auto& s : all) names.push_back(s.policy_name());
  EXPECT_EQ(names, (std::vector<std::string>{"randomizedq", "randomizedq-backward", "randomizedq-init",
                                             "randomizedq-update", "reversedq"}));
  cfg.algo = "oracle";
  EXPECT_EQ(cfg.run_specs().at(0).policy_name(), "oracle");
  cfg.algo = "random";
  EXPECT_EQ(cfg.run_specs().at(0).policy_name(), "random");
}

TEST(Config, FlagsOverrideFile) {
  TempDir dir;
  fs::create_directories(dir.path());
  const auto file = dir.path() / "cfg.json";
  std::ofstream(file) << R"({"env": {"name": "chain", "parameters": {"num_states": 10}}, "run": {"seeds": 2}})";
  RunOverrides o;
  o.seeds = 7;
  o.chain_states = 6;
  o.kappa = 0.5;
  o.ensembles = 4;
  o.eta = 0.2;
  o.n0 = 0.3;
  o.horizon = 9;
  const auto cfg = merge_overrides(load_experiment_config(file.string()), o);
  EXPECT_EQ(cfg.resolved_seeds(), 7u);
  EXPECT_EQ(cfg.chain.num_states, 6u);
  EXPECT_EQ(cfg.chain.horizon, 9u);
  const auto& a = std::get<AgentConfig>(cfg.run_specs()[0].policy);
  EXPECT_EQ(a.inflation, 0.5);
  EXPECT_EQ(a.ensemble_size, 4u);
  EXPECT_EQ(a.mixing_rate, 0.2);
  EXPECT_EQ(a.prior_transitions, 0.3);
  EXPECT_THROW(load_experiment_config((dir.path() / "missing.json").string()), ConfigError);
  std::ofstream(dir.path() / "broken.json") << "{ not json";
  EXPECT_THROW(load_experiment_config((dir.path() / "broken.json").string()), ConfigError);
}

TEST(ResultsIo, DoublesRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 2.5e-17, 123456.789012345678, 0.0}) EXPECT_EQ(parse_double(format_double(x)), x);
  EXPECT_TRUE(std::isnan(parse_double(format_double(std::nan("")))));
  EXPECT_THROW(parse_double("1.5x"), ResultsError);
  EXPECT_THROW(parse_u64("-3"), ResultsError);
}

TEST(CmdRun, WritesCsvAndManifest) {
  TempDir dir;
  std::ostringstream log;
  const auto outcome = cmd_run(small_config("bdcl", "all", dir.path()), log);
  EXPECT_TRUE(outcome.complete);
  const auto summary = read_summary(dir.path());
  ASSERT_EQ(summary.size(), 5u);
  const auto episodes = read_episodes(dir.path());
  EXPECT_EQ(episodes.size(), 5u * 3u * 30u);
  EXPECT_EQ(slurp(dir.path() / "episodes.csv").substr(0, kEpisodesHeader.size()), kEpisodesHeader);
  EXPECT_EQ(slurp(dir.path() / "summary.csv").find('\r'), std::string::npos);

  const auto manifest = json::parse(slurp(dir.path() / "manifest.json"));
  EXPECT_EQ(manifest.at("status"), "complete");
  EXPECT_EQ(manifest.at("seeds"), json({1, 2, 3}));
  ASSERT_EQ(manifest.at("variants").size(), 5u);
  const auto& v = manifest.at("variants").at(4);
  EXPECT_EQ(v.at("name"), "reversedq");
  EXPECT_EQ(v.at("params").at("ensemble_size"), 10);
  EXPECT_EQ(v.at("runs").at(0).at("structure_seed"), derive_seed(1, "structure"));
}

TEST(CmdRun, SingleSeedRerunIsBitIdentical) {
  TempDir a, b;
  std::ostringstream log;
  cmd_run(small_config("bdcl", "reversedq", a.path(), 1, 40), log);
  cmd_run(small_config("bdcl", "reversedq", b.path(), 1, 40), log);
  EXPECT_EQ(read_summary(a.path()).size(), 1u);
  EXPECT_EQ(slurp(a.path() / "episodes.csv"), slurp(b.path() / "episodes.csv"));
  EXPECT_EQ(slurp(a.path() / "summary.csv"), slurp(b.path() / "summary.csv"));
}

TEST(CmdRun, ManifestConfigReproducesResults) {
  TempDir a, b;
  std::ostringstream log;
  auto cfg = small_config("chain", "randomizedq", a.path(), 2, 15);
  apply_agent_override(cfg, "inflation", 1.5);
  cfg.chain.num_states = 7;
  cmd_run(cfg, log);
  auto doc = json::parse(slurp(a.path() / "manifest.json")).at("config");
  doc["run"]["output_dir"] = b.path().string();
  cmd_run(parse_experiment_config(doc), log);
  EXPECT_EQ(slurp(a.path() / "episodes.csv"), slurp(b.path() / "episodes.csv"));
  EXPECT_EQ(slurp(a.path() / "summary.csv"), slurp(b.path() / "summary.csv"));
}

TEST(CmdReport, ReadsOnlyCsvFiles) {
  TempDir dir;
  std::ostringstream log;
  cmd_run(small_config("bdcl", "all", dir.path()), log);
  const std::string first = cmd_report(dir.path());
  fs::remove(dir.path() / "manifest.json");
  EXPECT_EQ(cmd_report(dir.path()), first);

  const auto rows = read_summary(dir.path());
  std::vector<double> means;
  std::regex row(R"(\| \**([A-Za-z-]+)\** \| \**(-?[0-9.]+) ± ([0-9.]+)\** \|)");
  for (std::sregex_iterator it(first.begin(), first.end(), row), end; it != end; ++it) means.push_back(std::stod((*it)[2]));
  ASSERT_EQ(means.size(), 5u);
  EXPECT_TRUE(std::ranges::is_sorted(means));
  EXPECT_NE(first.find("| **ReversedQ** |"), std::string::npos);
  EXPECT_NE(first.find("BDCL Scaled Mean Cumulative Reward with 95% Confidence Intervals"), std::string::npos);
}

TEST(CmdReport, EmptyDirectoryIsAnError) {
  TempDir dir;
  fs::create_directories(dir.path());
  try {
    cmd_report(dir.path());
    FAIL() << "expected an error";
  } catch (const ResultsError& e) {
    EXPECT_NE(std::string(e.what()).find("no results"), std::string::npos);
  }
  write_results(dir.path(), {});
  EXPECT_THROW(cmd_report(dir.path()), ResultsError);
}

TEST(CmdReport, SingleVariantGivesOneRow) {
  TempDir dir;
  std::ostringstream log;
  cmd_run(small_config("chain", "randomizedq", dir.path(), 2, 10), log);
  const auto report = cmd_report(dir.path());
  EXPECT_EQ(count(report, "| RandomizedQ |"), 1u);
  EXPECT_EQ(count(report, "\n| "), 2u);  // header row plus one policy row
}

TEST(CmdReport, CorruptSummaryIsAnError) {
  TempDir dir;
  fs::create_directories(dir.path());
  std::ofstream(dir.path() / "summary.csv") << kSummaryHeader << "\nreversedq,bdcl,3,abc,1,1,0\n";
  EXPECT_THROW(cmd_report(dir.path()), ResultsError);
  std::ofstream(dir.path() / "summary.csv") << "wrong,header\n";
  EXPECT_THROW(cmd_report(dir.path()), ResultsError);
}

TEST(CmdPlot, CurvesWithBands) {
  TempDir dir;
  std::ostringstream log;
  cmd_run(small_config("bdcl", "all", dir.path(), 3, 500), log);
  const auto svg_path = dir.path() / "plot.svg";
  cmd_plot(dir.path(), svg_path);
  const auto svg = slurp(svg_path);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(count(svg, "<polyline"), 5u);
  EXPECT_EQ(count(svg, "<polygon"), 5u);
  EXPECT_NE(svg.find(">Oracle<"), std::string::npos);
  EXPECT_NE(svg.find(">Random<"), std::string::npos);
  EXPECT_NE(svg.find(">500<"), std::string::npos);
  EXPECT_NE(svg.find(">ReversedQ<"), std::string::npos);
}

TEST(CmdPlot, SingleSeedHasNoBands) {
  TempDir dir;
  std::ostringstream log;
  cmd_run(small_config("chain", "reversedq", dir.path(), 1, 1200), log);
  cmd_plot(dir.path(), dir.path() / "plot.svg", "chain");
  const auto svg = slurp(dir.path() / "plot.svg");
  EXPECT_EQ(count(svg, "<polyline"), 1u);
  EXPECT_EQ(count(svg, "<polygon"), 0u);
  EXPECT_NE(svg.find(">1200<"), std::string::npos);
  EXPECT_THROW(cmd_plot(dir.path(), dir.path() / "x.svg", "bdcl"), ResultsError);
}

TEST(CmdPlot, MissingDataIsAnError) {
  TempDir dir;
  fs::create_directories(dir.path());
  EXPECT_THROW(cmd_plot(dir.path(), dir.path() / "plot.svg"), ResultsError);
}

TEST(NiceTicks, RoundAndBounded) {
  for (auto [lo, hi] : {std::pair{1.0, 500.0}, std::pair{1.0, 1200.0}, std::pair{-3.7, 104.2}, std::pair{0.0, 1.0},
                        std::pair{1.0, 2.0}, std::pair{-20.0, 130.0}}) {
    const auto t = nice_ticks(lo, hi);
    ASSERT_FALSE(t.empty());
    EXPECT_LE(t.size(), 8u);
    EXPECT_GE(t.front(), lo - 1e-9);
    EXPECT_LE(t.back(), hi + 1e-9);
    const double step = t.size() > 1 ? t[1] - t[0] : 1.0;
    const double mantissa = step / std::pow(10.0, std::floor(std::log10(step)));
    EXPECT_TRUE(std::abs(mantissa - 1) < 1e-9 || std::abs(mantissa - 2) < 1e-9 || std::abs(mantissa - 5) < 1e-9) << step;
  }
}
