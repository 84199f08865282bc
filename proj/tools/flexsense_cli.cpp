// flexsense command line: Monte Carlo runs, scenario listing, closed-form curves.
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flexsense/bench.hpp"
#include "flexsense/errors.hpp"

namespace {

int run_command(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<int> trials,
                const std::string& out_path, std::optional<int> threads, bool timing, bool quiet) {
  flexsense::BenchConfig config = flexsense::load_config(config_path);
  if (seed) config.seed = *seed;
  if (trials) config.trials = *trials;
  if (threads) config.threads = *threads;
  if (timing) config.timing = true;
  if (!out_path.empty()) config.output = out_path;
  flexsense::validate_config(config);

  const flexsense::RunReport report = flexsense::run_scenario(config);
  if (!quiet) {
    for (const auto& line : report.diagnostics) std::cerr << "diagnostic: " << line << '\n';
  }
  if (config.output.empty()) {
    std::cout << flexsense::format_csv(report.rows);
  } else {
    flexsense::write_csv(report.rows, config.output);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flexsense: sensing-assisted channel estimation benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  std::string out_path;
  bool timing = false;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "run a Monte Carlo scenario and write CSV");
  run->add_option("--config", config_path, "config file (JSON)")->required();
  run->add_option("--seed", seed, "master seed (u64)");
  run->add_option("--trials", trials, "trials per SNR")->check(CLI::PositiveNumber);
  run->add_option("--out", out_path, "output CSV (stdout when omitted)");
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--timing", timing, "record wall-clock runtimes (output no longer reproducible)");
  run->add_flag("--quiet", quiet, "suppress per-trial diagnostics");

  auto* scenarios = app.add_subcommand("scenarios", "built-in scenarios");
  scenarios->require_subcommand(1);
  auto* list = scenarios->add_subcommand("list", "print built-in scenario names");

  std::string theory_config;
  auto* theory = app.add_subcommand("theory", "closed-form pilot-overhead NMSE curves as CSV");
  theory->add_option("--config", theory_config, "config file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) return run_command(config_path, seed, trials, out_path, threads, timing, quiet);
    if (list->parsed()) {
      for (const auto& s : flexsense::builtin_scenarios()) std::cout << s.name << '\t' << s.description << '\n';
      return 0;
    }
    if (theory->parsed()) {
      std::cout << flexsense::theory_csv(flexsense::load_config(theory_config));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
