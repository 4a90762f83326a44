#pragma once

// Experiment configuration: JSON schema, defaults and validation.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dqucb/agents.hpp"
#include "dqucb/density.hpp"
#include "dqucb/envs.hpp"

namespace dqucb {

enum class AgentKind { dqucb, qucb, ucbvi };

struct AgentConfig {
  AgentKind kind = AgentKind::dqucb;
  Setting setting = Setting::episodic;
  double c = 0.5;
  double delta = 0.1;
  double gamma = 0.9;
  BonusForm bonus_form = BonusForm::theory;
  bool operator==(const AgentConfig&) const = default;
};

struct DensityConfig {
  DensityOptions options;
  bool pooled = false;
  bool operator==(const DensityConfig&) const = default;
};

struct RunConfig {
  std::uint64_t length = 50000;  // K episodes or T steps
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::uint64_t eval_stride = 0;  // 0 selects the automatic stride
  bool record_timing = false;
  bool operator==(const RunConfig&) const = default;
};

struct ExperimentConfig {
  ShiftSchedule<EnvSpec> env;
  AgentConfig agent;
  DensityConfig density;
  RunConfig run;
  std::string output_dir = "out";
  bool operator==(const ExperimentConfig&) const = default;
};

enum class ConfigErrorKind { missing_file, malformed_json, schema, inconsistent };

/// Configuration failure tagged with the dotted JSON path at fault.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(ConfigErrorKind kind, std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message), kind_(kind), path_(std::move(path)) {}

  ConfigErrorKind kind() const { return kind_; }
  const std::string& path() const { return path_; }

 private:
  ConfigErrorKind kind_;
  std::string path_;
};

ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& config);

/// Evaluation stride actually used: the configured one, or every step up to
/// 1e5 steps and every 10 beyond.
std::uint64_t effective_eval_stride(const ExperimentConfig& config);

const char* to_string(AgentKind kind);
const char* env_kind_name(const EnvSpec& spec);

}  // namespace dqucb
