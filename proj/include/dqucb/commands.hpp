#pragma once

// Command implementations behind the dqucb executable. Each returns the
// process exit status: 0 success, 1 validation error, 2 runtime error.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dqucb/harness.hpp"

namespace dqucb {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

using OutputDir = std::optional<std::filesystem::path>;

int cmd_run(const std::filesystem::path& config_path, std::uint64_t seed, const OutputDir& out, std::ostream& log);
int cmd_sweep(const std::filesystem::path& config_path, const OutputDir& out, std::ostream& log);
int cmd_compare(const std::vector<std::filesystem::path>& config_paths, const OutputDir& out, std::ostream& log);

/// Per-seed final cumulative regret for each compared agent.
struct Comparison {
  std::vector<std::string> labels;
  std::vector<std::uint64_t> seeds;
  std::vector<SweepResult> sweeps;  // aligned with labels

  double final_regret(std::size_t agent, std::size_t seed) const { return sweeps[agent].runs[seed].back().cum_regret; }
  /// Seeds on which `agent` has strictly the lowest final cumulative regret.
  std::size_t wins(std::size_t agent) const;
};

/// Paired-seed comparison; configs must share env and run sections.
Comparison compare(const std::vector<ExperimentConfig>& configs, const std::vector<std::string>& labels,
                   std::size_t threads = 0);

void write_comparison_csv(const std::filesystem::path& path, const Comparison& comparison);
std::string run_file_name(std::uint64_t seed);

}  // namespace dqucb
