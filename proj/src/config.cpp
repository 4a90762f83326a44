#include "dqucb/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <set>
#include <sstream>

namespace dqucb {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& message) {
  throw ConfigError(ConfigErrorKind::schema, path, message);
}

[[noreturn]] void inconsistent(const std::string& path, const std::string& message) {
  throw ConfigError(ConfigErrorKind::inconsistent, path, message);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

/// Read-only view of a JSON object that knows its own path.
class Node {
 public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) schema_error(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  bool has(const char* key) const { return value_.contains(key); }
  std::string at_path(const char* key) const { return join(path_, key); }
  const json& raw(const char* key) const { return value_.at(key); }

  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& item : value_.items()) {
      const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; });
      if (!known) schema_error(join(path_, item.key()), "unknown key");
    }
  }

  Node child(const char* key) const { return Node(value_.at(key), at_path(key)); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = value_.at(key);
    if (!v.is_number()) schema_error(at_path(key), "expected a number");
    return v.get<double>();
  }

  std::int64_t integer(const char* key, std::int64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = value_.at(key);
    if (!v.is_number_integer()) schema_error(at_path(key), "expected an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
      schema_error(at_path(key), "integer out of range");
    return v.get<std::int64_t>();
  }

  std::uint64_t positive(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::int64_t v = integer(key, 0);
    if (v < 1) schema_error(at_path(key), "expected a positive integer");
    return static_cast<std::uint64_t>(v);
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = value_.at(key);
    if (!v.is_boolean()) schema_error(at_path(key), "expected a boolean");
    return v.get<bool>();
  }

  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = value_.at(key);
    if (!v.is_string()) schema_error(at_path(key), "expected a string");
    return v.get<std::string>();
  }

 private:
  const json& value_;
  std::string path_;
};

Cell parse_cell(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    schema_error(path, "expected a [row, col] pair of integers");
  const auto row = v[0].get<std::int64_t>();
  const auto col = v[1].get<std::int64_t>();
  if (row < -1000000 || row > 1000000 || col < -1000000 || col > 1000000) schema_error(path, "cell out of range");
  return {static_cast<int>(row), static_cast<int>(col)};
}

Cell cell_or(const Node& node, const char* key, Cell fallback) {
  return node.has(key) ? parse_cell(node.raw(key), node.at_path(key)) : fallback;
}

std::vector<Cell> cells_or(const Node& node, const char* key, std::vector<Cell> fallback) {
  if (!node.has(key)) return fallback;
  const json& v = node.raw(key);
  if (!v.is_array()) schema_error(node.at_path(key), "expected an array of [row, col] pairs");
  std::vector<Cell> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_cell(v[i], node.at_path(key) + "[" + std::to_string(i) + "]"));
  return out;
}

int grid_extent(const Node& node, const char* key, int fallback) {
  const std::int64_t v = node.integer(key, fallback);
  if (v < 1 || v > 4096) schema_error(node.at_path(key), "grid extent must lie in [1, 4096]");
  return static_cast<int>(v);
}

json cell_json(Cell c) { return json::array({c.row, c.col}); }

json cells_json(const std::vector<Cell>& cells) {
  json out = json::array();
  for (const Cell& c : cells) out.push_back(cell_json(c));
  return out;
}

// Regime-specific fields per environment kind.
void apply_regime(const Node& params, EnvSpec& spec) {
  std::visit(
      [&](auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GridWorldSpec>) {
          params.allow({"noise", "walls"});
          s.noise = params.number("noise", s.noise);
          s.walls = cells_or(params, "walls", s.walls);
        } else if constexpr (std::is_same_v<T, FrozenLakeSpec>) {
          params.allow({"slip"});
          s.slip = params.number("slip", s.slip);
        } else {
          params.allow({"success", "reversed"});
          s.success = params.number("success", s.success);
          s.reversed = params.boolean("reversed", s.reversed);
        }
      },
      spec);
}

json regime_json(const EnvSpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GridWorldSpec>) return {{"noise", s.noise}, {"walls", cells_json(s.walls)}};
        else if constexpr (std::is_same_v<T, FrozenLakeSpec>) return {{"slip", s.slip}};
        else return {{"success", s.success}, {"reversed", s.reversed}};
      },
      spec);
}

EnvSpec parse_env_base(const Node& env, const Timing& timing) {
  const std::string kind = env.string("kind", "");
  if (kind == "gridworld") {
    env.allow({"kind", "rows", "cols", "start", "goal", "horizon", "noise", "walls", "shifts"});
    GridWorldSpec s;
    s.rows = grid_extent(env, "rows", s.rows);
    s.cols = grid_extent(env, "cols", s.cols);
    s.start = cell_or(env, "start", {1, 1});
    s.goal = cell_or(env, "goal", {s.rows, s.cols});
    s.noise = env.number("noise", s.noise);
    s.walls = cells_or(env, "walls", {});
    s.timing = timing;
    return s;
  }
  if (kind == "frozenlake") {
    env.allow({"kind", "rows", "cols", "start", "goal", "horizon", "holes", "slip", "shifts"});
    FrozenLakeSpec s;
    s.rows = grid_extent(env, "rows", s.rows);
    s.cols = grid_extent(env, "cols", s.cols);
    const bool classic = s.rows == 4 && s.cols == 4;
    s.start = cell_or(env, "start", {1, 1});
    s.goal = cell_or(env, "goal", {s.rows, s.cols});
    s.holes = cells_or(env, "holes", classic ? s.holes : std::vector<Cell>{});
    s.slip = env.number("slip", s.slip);
    s.timing = timing;
    return s;
  }
  if (kind == "chain") {
    env.allow({"kind", "length", "success", "reversed", "horizon", "shifts"});
    ChainSpec s;
    const std::int64_t length = env.integer("length", s.length);
    if (length < 2 || length > 1000000) schema_error(env.at_path("length"), "chain length must lie in [2, 1e6]");
    s.length = static_cast<int>(length);
    s.success = env.number("success", s.success);
    s.reversed = env.boolean("reversed", s.reversed);
    s.timing = timing;
    return s;
  }
  if (!env.has("kind")) schema_error(env.at_path("kind"), "missing environment kind");
  schema_error(env.at_path("kind"), "unknown environment kind '" + kind + "'");
}

void validate_spec(const EnvSpec& spec, const std::string& path) {
  try {
    (void)build_mdp(spec);
  } catch (const std::invalid_argument& e) {
    inconsistent(path, e.what());
  }
}

AgentConfig parse_agent(const Node& agent) {
  agent.allow({"kind", "setting", "c", "delta", "gamma", "bonus_form"});
  AgentConfig out;
  const std::string kind = agent.string("kind", "");
  if (kind == "dqucb") out.kind = AgentKind::dqucb;
  else if (kind == "qucb") out.kind = AgentKind::qucb;
  else if (kind == "ucbvi") out.kind = AgentKind::ucbvi;
  else if (!agent.has("kind")) schema_error(agent.at_path("kind"), "missing agent kind");
  else schema_error(agent.at_path("kind"), "unknown agent kind '" + kind + "'");

  const std::string setting = agent.string("setting", "episodic");
  if (setting == "episodic") out.setting = Setting::episodic;
  else if (setting == "discounted") out.setting = Setting::discounted;
  else schema_error(agent.at_path("setting"), "expected 'episodic' or 'discounted'");

  out.c = agent.number("c", out.c);
  if (!(out.c > 0.0)) schema_error(agent.at_path("c"), "must be positive");
  out.delta = agent.number("delta", out.delta);
  if (!(out.delta > 0.0 && out.delta < 1.0)) schema_error(agent.at_path("delta"), "must lie in (0,1)");
  out.gamma = agent.number("gamma", out.gamma);
  if (!(out.gamma > 0.0 && out.gamma < 1.0)) schema_error(agent.at_path("gamma"), "must lie in (0,1)");

  const std::string form = agent.string("bonus_form", "theory");
  if (form == "theory") out.bonus_form = BonusForm::theory;
  else if (form == "demo") out.bonus_form = BonusForm::demo;
  else schema_error(agent.at_path("bonus_form"), "expected 'theory' or 'demo'");

  if (out.kind == AgentKind::ucbvi && out.setting == Setting::discounted)
    inconsistent(agent.at_path("setting"), "ucbvi is only available in the episodic setting");
  return out;
}

DensityConfig parse_density(const Node& density) {
  density.allow({"n", "bandwidth", "min_likelihood", "max_likelihood", "pooled"});
  DensityConfig out;
  out.options.capacity = density.positive("n", out.options.capacity);
  out.options.bandwidth = density.number("bandwidth", out.options.bandwidth);
  if (!(out.options.bandwidth > 0.0)) schema_error(density.at_path("bandwidth"), "must be positive");
  out.options.min_likelihood = density.number("min_likelihood", out.options.min_likelihood);
  if (!(out.options.min_likelihood > 0.0)) schema_error(density.at_path("min_likelihood"), "must be positive");
  out.options.max_likelihood = density.number("max_likelihood", out.options.max_likelihood);
  if (!(out.options.max_likelihood >= out.options.min_likelihood))
    inconsistent(density.at_path("max_likelihood"), "must be >= min_likelihood");
  out.pooled = density.boolean("pooled", out.pooled);
  return out;
}

RunConfig parse_run(const Node& run, Setting setting) {
  run.allow({"episodes", "steps", "seeds", "eval_stride", "record_timing"});
  RunConfig out;
  const char* length_key = setting == Setting::episodic ? "episodes" : "steps";
  const char* other_key = setting == Setting::episodic ? "steps" : "episodes";
  if (run.has(other_key))
    inconsistent(run.at_path(other_key), std::string("not valid in the ") +
                                             (setting == Setting::episodic ? "episodic" : "discounted") + " setting");
  out.length = run.positive(length_key, setting == Setting::episodic ? 50000 : 100000);
  if (run.has("seeds")) {
    const json& seeds = run.raw("seeds");
    if (!seeds.is_array()) schema_error(run.at_path("seeds"), "expected an array of non-negative integers");
    out.seeds.clear();
    std::set<std::uint64_t> seen;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const json& v = seeds[i];
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        schema_error(run.at_path("seeds") + "[" + std::to_string(i) + "]", "expected a non-negative integer");
      const auto seed = v.get<std::uint64_t>();
      if (!seen.insert(seed).second) {
        std::cerr << "warning: " << run.at_path("seeds") << ": dropping duplicate seed " << seed << "\n";
        continue;
      }
      out.seeds.push_back(seed);
    }
    if (out.seeds.empty()) schema_error(run.at_path("seeds"), "at least one seed is required");
  }
  const std::int64_t stride = run.integer("eval_stride", 0);
  if (stride < 0) schema_error(run.at_path("eval_stride"), "must be >= 0");
  out.eval_stride = static_cast<std::uint64_t>(stride);
  out.record_timing = run.boolean("record_timing", out.record_timing);
  return out;
}

}  // namespace

ExperimentConfig parse_config_json(const json& doc) {
  const Node root(doc, "");
  root.allow({"env", "agent", "density", "run", "output"});
  if (!root.has("env")) schema_error("env", "missing environment section");
  if (!root.has("agent")) schema_error("agent", "missing agent section");

  ExperimentConfig config;
  config.agent = parse_agent(root.child("agent"));
  if (root.has("density")) config.density = parse_density(root.child("density"));
  config.run = root.has("run") ? parse_run(root.child("run"), config.agent.setting)
                               : parse_run(Node(json::object(), "run"), config.agent.setting);
  if (root.has("output")) {
    const Node output = root.child("output");
    output.allow({"dir"});
    config.output_dir = output.string("dir", config.output_dir);
    if (config.output_dir.empty()) schema_error(output.at_path("dir"), "must be non-empty");
  }

  const Node env = root.child("env");
  Timing timing;
  const std::int64_t horizon = env.integer("horizon", env.string("kind", "") == "chain" ? 20 : 100);
  if (horizon < 1 || horizon > 100000) schema_error(env.at_path("horizon"), "must lie in [1, 100000]");
  timing.horizon = static_cast<std::size_t>(horizon);
  if (config.agent.setting == Setting::discounted) timing.gamma = config.agent.gamma;
  const EnvSpec base = parse_env_base(env, timing);

  std::vector<ShiftSchedule<EnvSpec>::Segment> segments;
  if (!env.has("shifts")) {
    validate_spec(base, "env");
    segments.push_back({1, base});
  } else {
    const json& shifts = env.raw("shifts");
    const std::string shifts_path = env.at_path("shifts");
    if (!shifts.is_array() || shifts.empty()) schema_error(shifts_path, "expected a non-empty array");
    for (std::size_t i = 0; i < shifts.size(); ++i) {
      const Node shift(shifts[i], shifts_path + "[" + std::to_string(i) + "]");
      shift.allow({"start", "params"});
      if (!shift.has("start")) schema_error(shift.at_path("start"), "missing segment start");
      const std::uint64_t start = shift.positive("start", 1);
      if (i == 0 && start != 1) inconsistent(shift.at_path("start"), "the first segment must start at 1");
      if (i > 0 && start <= segments.back().start)
        inconsistent(shift.at_path("start"), "segment starts must be strictly increasing");
      if (start > config.run.length)
        inconsistent(shift.at_path("start"), "segment starts after the last " +
                                                 std::string(config.agent.setting == Setting::episodic ? "episode" : "step"));
      // Each regime inherits from the previous one, starting from the base.
      EnvSpec spec = segments.empty() ? base : segments.back().params;
      if (shift.has("params")) apply_regime(shift.child("params"), spec);
      validate_spec(spec, shift.path());
      segments.push_back({start, std::move(spec)});
    }
  }
  config.env = ShiftSchedule<EnvSpec>(std::move(segments));
  return config;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(ConfigErrorKind::malformed_json, "", std::string("malformed JSON: ") + e.what());
  }
  try {
    return parse_config_json(doc);
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(ConfigErrorKind::schema, "", e.what());
  }
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigErrorKind::missing_file, path.string(), "cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

const char* to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::dqucb: return "dqucb";
    case AgentKind::qucb: return "qucb";
    case AgentKind::ucbvi: return "ucbvi";
  }
  return "unknown";
}

const char* env_kind_name(const EnvSpec& spec) {
  switch (spec.index()) {
    case 0: return "gridworld";
    case 1: return "frozenlake";
    default: return "chain";
  }
}

json to_json(const ExperimentConfig& config) {
  const EnvSpec& base = config.env.segments().front().params;
  json env = std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GridWorldSpec>) {
          return {{"kind", "gridworld"}, {"rows", s.rows}, {"cols", s.cols}, {"start", cell_json(s.start)},
                  {"goal", cell_json(s.goal)}, {"horizon", s.timing.horizon}};
        } else if constexpr (std::is_same_v<T, FrozenLakeSpec>) {
          return {{"kind", "frozenlake"}, {"rows", s.rows}, {"cols", s.cols}, {"start", cell_json(s.start)},
                  {"goal", cell_json(s.goal)}, {"holes", cells_json(s.holes)}, {"horizon", s.timing.horizon}};
        } else {
          return {{"kind", "chain"}, {"length", s.length}, {"horizon", s.timing.horizon}};
        }
      },
      base);
  json shifts = json::array();
  for (const auto& segment : config.env.segments())
    shifts.push_back({{"start", segment.start}, {"params", regime_json(segment.params)}});
  env["shifts"] = std::move(shifts);

  const AgentConfig& a = config.agent;
  json agent = {{"kind", to_string(a.kind)},
                {"setting", a.setting == Setting::episodic ? "episodic" : "discounted"},
                {"c", a.c},
                {"delta", a.delta},
                {"gamma", a.gamma},
                {"bonus_form", a.bonus_form == BonusForm::theory ? "theory" : "demo"}};
  const DensityConfig& d = config.density;
  json density = {{"n", d.options.capacity},
                  {"bandwidth", d.options.bandwidth},
                  {"min_likelihood", d.options.min_likelihood},
                  {"max_likelihood", d.options.max_likelihood},
                  {"pooled", d.pooled}};
  json run = {{a.setting == Setting::episodic ? "episodes" : "steps", config.run.length},
              {"seeds", config.run.seeds},
              {"eval_stride", config.run.eval_stride},
              {"record_timing", config.run.record_timing}};
  return {{"env", env}, {"agent", agent}, {"density", density}, {"run", run}, {"output", {{"dir", config.output_dir}}}};
}

std::uint64_t effective_eval_stride(const ExperimentConfig& config) {
  if (config.run.eval_stride > 0) return config.run.eval_stride;
  if (config.agent.setting == Setting::episodic) return 1;
  return config.run.length <= 100000 ? 1 : 10;
}

}  // namespace dqucb
