#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "reversedq/commands.hpp"

using namespace reversedq;

namespace {

template <typename T>
void optional_flag(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
  app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble Q-learning experiments on BDCL and chain environments"};
  app.require_subcommand(1);

  RunOverrides flags;
  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment and write CSV results");
  run->add_option("--config", config_path, "JSON experiment config; flags override its values")->check(CLI::ExistingFile);
  optional_flag(run, "--env", flags.env, "bdcl or chain");
  optional_flag(run, "--algo", flags.algo, "preset name, all, oracle or random");
  optional_flag(run, "--seeds", flags.seeds, "number of seeds");
  optional_flag(run, "--episodes", flags.episodes, "episodes per run");
  optional_flag(run, "--seed-base", flags.seed_base, "first seed");
  optional_flag(run, "--out", flags.out, "output directory");
  optional_flag(run, "--kappa", flags.kappa, "inflation coefficient");
  optional_flag(run, "--ensembles", flags.ensembles, "ensemble size J");
  optional_flag(run, "--eta", flags.eta, "mixing rate");
  optional_flag(run, "--n0", flags.n0, "prior transitions");
  optional_flag(run, "--p-fail", flags.p_fail, "BDCL failure probability");
  optional_flag(run, "--chain-states", flags.chain_states, "chain length");
  optional_flag(run, "--horizon", flags.horizon, "episode horizon");
  optional_flag(run, "--structure-seed", flags.structure_seed, "pin the BDCL lock structure for every run");
  run->add_flag("--track-regret", flags.track_regret, "record greedy-snapshot regret");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Print the scaled-reward table of a results directory");
  report->add_option("dir", report_dir, "results directory")->required();

  std::string plot_dir, plot_out = "learning_curves.svg";
  std::optional<std::string> plot_env;
  auto* plot = app.add_subcommand("plot", "Write learning curves as SVG");
  plot->add_option("dir", plot_dir, "results directory")->required();
  plot->add_option("-o,--output", plot_out, "output SVG path");
  optional_flag(plot, "--env", plot_env, "environment to plot when the directory holds several");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
      cfg = merge_overrides(std::move(cfg), flags);
      const RunOutcome outcome = cmd_run(cfg, std::cout);
      if (!outcome.complete) {
        std::cerr << "error: " << outcome.error << "\nresults in " << cfg.output_dir << " are partial\n";
        return 1;
      }
      std::cout << "results written to " << cfg.output_dir << '\n';
    } else if (report->parsed()) {
      std::cout << cmd_report(report_dir);
    } else if (plot->parsed()) {
      cmd_plot(plot_dir, plot_out, plot_env);
      std::cout << "wrote " << plot_out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
