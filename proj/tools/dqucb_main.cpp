// dqucb command-line entry point: run, sweep and compare experiments.

#include <iostream>

#include <CLI11.hpp>

#include "dqucb/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Shift-aware optimistic Q-learning experiments"};
  app.require_subcommand(1);

  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> configs;

  auto* run = app.add_subcommand("run", "Run one seed and write its CSV");
  run->add_option("--config", config, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Seed")->required();
  run->add_option("--out", out, "Output directory (overrides output.dir)");

  auto* sweep = app.add_subcommand("sweep", "Run every configured seed and aggregate");
  sweep->add_option("--config", config, "Experiment config (JSON)")->required();
  sweep->add_option("--out", out, "Output directory (overrides output.dir)");

  auto* compare = app.add_subcommand("compare", "Paired-seed comparison of agent configs");
  compare->add_option("--configs", configs, "Experiment configs differing only in the agent")->required()->expected(2, -1);
  compare->add_option("--out", out, "Output directory (overrides output.dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? dqucb::kExitOk : dqucb::kExitValidation;
  }

  const dqucb::OutputDir dir = out.empty() ? dqucb::OutputDir{} : dqucb::OutputDir{out};
  if (run->parsed()) return dqucb::cmd_run(config, seed, dir, std::cerr);
  if (sweep->parsed()) return dqucb::cmd_sweep(config, dir, std::cerr);
  std::vector<std::filesystem::path> paths(configs.begin(), configs.end());
  return dqucb::cmd_compare(paths, dir, std::cerr);
}
