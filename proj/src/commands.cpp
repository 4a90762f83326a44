#include "dqucb/commands.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace dqucb {

namespace {

namespace fs = std::filesystem;

fs::path prepare_output(const ExperimentConfig& config, const OutputDir& out) {
  const fs::path dir = out ? *out : fs::path(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("output directory " + dir.string() + " is not writable");
  return dir;
}

void print_final(std::ostream& log, const std::string& label, const std::vector<AggregateRow>& aggregate) {
  const AggregateRow& last = aggregate.back();
  log << label << ": final cumulative regret " << format_real(last.mean_cum_regret) << " +/- "
      << format_real(last.std_cum_regret) << " over " << last.n_seeds << " seed(s)\n";
}

// Shared error mapping for the commands.
template <typename Body>
int guarded(std::ostream& log, Body&& body) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

std::string run_file_name(std::uint64_t seed) { return "run_seed" + std::to_string(seed) + ".csv"; }

int cmd_run(const fs::path& config_path, std::uint64_t seed, const OutputDir& out, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentConfig config = parse_config(config_path);
    const fs::path dir = prepare_output(config, out);
    const auto records = run_experiment(config, seed);
    const fs::path file = dir / run_file_name(seed);
    write_run_csv(file, records);
    log << "wrote " << file.string() << " (" << records.size() << " records, final cumulative regret "
        << format_real(records.back().cum_regret) << ")\n";
  });
}

int cmd_sweep(const fs::path& config_path, const OutputDir& out, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentConfig config = parse_config(config_path);
    const fs::path dir = prepare_output(config, out);
    const SweepResult result = sweep(config, config.run.seeds);
    for (std::size_t i = 0; i < result.seeds.size(); ++i)
      write_run_csv(dir / run_file_name(result.seeds[i]), result.runs[i]);
    write_aggregate_csv(dir / "aggregate.csv", result.aggregate);
    print_final(log, to_string(config.agent.kind), result.aggregate);
  });
}

std::size_t Comparison::wins(std::size_t agent) const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    bool best = true;
    for (std::size_t other = 0; other < sweeps.size() && best; ++other)
      if (other != agent && final_regret(other, i) <= final_regret(agent, i)) best = false;
    if (best) ++count;
  }
  return count;
}

Comparison compare(const std::vector<ExperimentConfig>& configs, const std::vector<std::string>& labels,
                   std::size_t threads) {
  if (configs.size() < 2) throw ConfigError(ConfigErrorKind::inconsistent, "", "compare needs at least two configs");
  if (labels.size() != configs.size()) throw std::invalid_argument("one label per config is required");
  for (std::size_t i = 1; i < configs.size(); ++i) {
    if (!(configs[i].env == configs[0].env))
      throw ConfigError(ConfigErrorKind::inconsistent, "env", "compared configs must share the env section");
    if (!(configs[i].run == configs[0].run))
      throw ConfigError(ConfigErrorKind::inconsistent, "run", "compared configs must share the run section");
    if (configs[i].agent.setting != configs[0].agent.setting)
      throw ConfigError(ConfigErrorKind::inconsistent, "agent.setting", "compared configs must share the setting");
  }
  Comparison comparison;
  comparison.labels = labels;
  comparison.seeds = configs[0].run.seeds;
  for (const auto& config : configs) comparison.sweeps.push_back(sweep(config, comparison.seeds, threads));
  return comparison;
}

void write_comparison_csv(const fs::path& path, const Comparison& comparison) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "index";
  for (const auto& label : comparison.labels) out << ",mean_cum_regret_" << label;
  out << '\n';
  const std::size_t length = comparison.sweeps.front().aggregate.size();
  for (std::size_t i = 0; i < length; ++i) {
    out << comparison.sweeps.front().aggregate[i].index;
    for (const auto& sweep : comparison.sweeps) out << ',' << format_real(sweep.aggregate[i].mean_cum_regret);
    out << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

int cmd_compare(const std::vector<fs::path>& config_paths, const OutputDir& out, std::ostream& log) {
  return guarded(log, [&] {
    std::vector<ExperimentConfig> configs;
    std::vector<std::string> labels;
    std::set<std::string> used;
    for (const auto& path : config_paths) {
      configs.push_back(parse_config(path));
      std::string label = path.stem().string();
      if (label.empty()) label = to_string(configs.back().agent.kind);
      while (!used.insert(label).second) label += "_" + std::to_string(labels.size());
      labels.push_back(label);
    }
    if (configs.size() < 2) throw ConfigError(ConfigErrorKind::inconsistent, "", "compare needs at least two configs");
    const fs::path dir = prepare_output(configs[0], out);
    const Comparison comparison = compare(configs, labels);
    for (std::size_t a = 0; a < labels.size(); ++a) {
      const fs::path sub = dir / labels[a];
      fs::create_directories(sub);
      const SweepResult& result = comparison.sweeps[a];
      for (std::size_t i = 0; i < result.seeds.size(); ++i)
        write_run_csv(sub / run_file_name(result.seeds[i]), result.runs[i]);
      write_aggregate_csv(sub / "aggregate.csv", result.aggregate);
      print_final(log, labels[a], result.aggregate);
    }
    write_comparison_csv(dir / "comparison.csv", comparison);
    for (std::size_t a = 0; a < labels.size(); ++a)
      log << "summary: " << labels[a] << " has the lowest final cumulative regret in " << comparison.wins(a) << "/"
          << comparison.seeds.size() << " paired seeds\n";
  });
}

}  // namespace dqucb
