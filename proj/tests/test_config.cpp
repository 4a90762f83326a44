#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "dqucb/config.hpp"
#include "dqucb/envs.hpp"

using namespace dqucb;
using nlohmann::json;

namespace {

const char* kFullGrid = R"({
  "env": {"kind": "gridworld", "rows": 10, "cols": 5, "horizon": 100, "noise": 0.01,
          "shifts": [{"start": 1}, {"start": 25000, "params": {"noise": 0.2}}]},
  "agent": {"kind": "dqucb"},
  "run": {"episodes": 50000}
})";

ConfigError parse_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a configuration error for: " << text);
  return ConfigError(ConfigErrorKind::schema, "", "");
}

}  // namespace

TEST_CASE("minimal config gets the defaults") {
  const auto config = parse_config_text(R"({"env": {"kind": "gridworld"}, "agent": {"kind": "qucb"}})");
  CHECK(config.density.options.capacity == 100);
  CHECK(config.density.options.bandwidth == 0.5);
  CHECK(config.density.options.min_likelihood == 1e-3);
  CHECK(config.density.options.max_likelihood == 1e3);
  CHECK_FALSE(config.density.pooled);
  CHECK(config.agent.c == 0.5);
  CHECK(config.agent.delta == 0.1);
  CHECK(config.agent.kind == AgentKind::qucb);
  CHECK(config.agent.setting == Setting::episodic);
  CHECK(config.agent.bonus_form == BonusForm::theory);
  CHECK(config.run.length == 50000);
  CHECK(config.run.seeds.size() == 10);
  CHECK(config.env.size() == 1);
  CHECK(std::get<GridWorldSpec>(config.env.regime_at(1)) == GridWorldSpec{});
  CHECK(effective_eval_stride(config) == 1);
}

TEST_CASE("full-size gridworld config round-trips") {
  const auto config = parse_config_text(kFullGrid);
  const auto& before = std::get<GridWorldSpec>(config.env.regime_at(24999));
  const auto& after = std::get<GridWorldSpec>(config.env.regime_at(25000));
  CHECK(before.noise == 0.01);
  CHECK(after.noise == 0.2);
  CHECK(after.rows == 10);
  CHECK(after.timing.horizon == 100);

  const json serialized = to_json(config);
  const auto again = parse_config_json(serialized);
  CHECK(again == config);
  CHECK(to_json(again) == serialized);
}

TEST_CASE("round trip of every environment kind") {
  for (const char* text : {
           R"({"env": {"kind": "frozenlake", "horizon": 100,
                       "shifts": [{"start": 1}, {"start": 4001, "params": {"slip": 0.5}}, {"start": 8001, "params": {"slip": 0.6666666666666666}}]},
               "agent": {"kind": "qucb", "bonus_form": "demo"}, "run": {"episodes": 12000, "seeds": [3, 1]}})",
           R"({"env": {"kind": "chain", "length": 6,
                       "shifts": [{"start": 1}, {"start": 100001, "params": {"reversed": true}}]},
               "agent": {"kind": "dqucb", "setting": "discounted", "gamma": 0.9},
               "density": {"n": 50, "bandwidth": 0.3, "pooled": true},
               "run": {"steps": 200000, "eval_stride": 5}, "output": {"dir": "x"}})",
           R"({"env": {"kind": "gridworld", "rows": 5, "cols": 5, "goal": [5, 5], "walls": [[3, 3]],
                       "shifts": [{"start": 1}, {"start": 10, "params": {"walls": []}}]},
               "agent": {"kind": "ucbvi", "c": 2, "delta": 0.05}, "run": {"episodes": 20, "record_timing": true}})"}) {
    const auto config = parse_config_text(text);
    CHECK(parse_config_json(to_json(config)) == config);
  }
  const auto chain = parse_config_text(R"({"env": {"kind": "chain"}, "agent": {"kind": "dqucb", "setting": "discounted"},
                                           "run": {"steps": 200000}})");
  CHECK(std::get<ChainSpec>(chain.env.regime_at(1)).timing.gamma == 0.9);
  CHECK(effective_eval_stride(chain) == 10);
}

TEST_CASE("regimes inherit from the previous segment") {
  const auto config = parse_config_text(R"({
    "env": {"kind": "chain", "success": 0.8,
            "shifts": [{"start": 1}, {"start": 5, "params": {"reversed": true}}, {"start": 9, "params": {"success": 0.7}}]},
    "agent": {"kind": "qucb", "setting": "discounted"}, "run": {"steps": 20}})");
  const auto& third = std::get<ChainSpec>(config.env.regime_at(9));
  CHECK(third.reversed);
  CHECK(third.success == 0.7);
  CHECK(std::get<ChainSpec>(config.env.regime_at(5)).success == 0.8);
}

TEST_CASE("validation errors name the offending path") {
  SUBCASE("shift beyond the run") {
    const auto e = parse_error(R"({"env": {"kind": "gridworld",
      "shifts": [{"start": 1}, {"start": 60000, "params": {"noise": 0.2}}]},
      "agent": {"kind": "dqucb"}, "run": {"episodes": 50000}})");
    CHECK(e.kind() == ConfigErrorKind::inconsistent);
    CHECK(e.path() == "env.shifts[1].start");
  }
  struct Case {
    const char* text;
    ConfigErrorKind kind;
    const char* path;
  };
  const Case cases[] = {
      {R"({"env": {"kind": "gridworld"}, "agent": {"kind": "qucb"}, "extra": 1})", ConfigErrorKind::schema, "extra"},
      {R"({"env": {"kind": "gridworld", "nosie": 0.1}, "agent": {"kind": "qucb"}})", ConfigErrorKind::schema,
       "env.nosie"},
      {R"({"env": {"kind": "maze"}, "agent": {"kind": "qucb"}})", ConfigErrorKind::schema, "env.kind"},
      {R"({"agent": {"kind": "qucb"}})", ConfigErrorKind::schema, "env"},
      {R"({"env": {"kind": "gridworld"}})", ConfigErrorKind::schema, "agent"},
      {R"({"env": {"kind": "gridworld"}, "agent": {"kind": "sarsa"}})", ConfigErrorKind::schema, "agent.kind"},
      {R"({"env": {"kind": "gridworld"}, "agent": {"kind": "qucb", "c": -1}})", ConfigErrorKind::schema, "agent.c"},
      {R"({"env": {"kind": "gridworld"}, "agent": {"kind": "qucb", "delta": 1}})", ConfigErrorKind::schema,
       "agent.delta"},
      {R"({"env": {"kind": "gridworld"}, "agent": {"kind": "qucb", "c": "big"}})", ConfigErrorKind::schema, "agent.c"},
      {R"({"env": {"kind": "chain"}, "agent": {"kind": "ucbvi", "setting": "discounted"}})",
       ConfigErrorKind::inconsistent, "agent.setting"},
      {R"({"env": {"kind": "gridworld"}, "agent": {"kind": "qucb"}, "run": {"steps": 10}})",
       ConfigErrorKind::inconsistent, "run.steps"},
      {R"({"env": {"kind": "gridworld"}, "agent": {"kind": "qucb"}, "run": {"episodes": 0}})", ConfigErrorKind::schema,
       "run.episodes"},
      {R"({"env": {"kind": "gridworld"}, "agent": {"kind": "qucb"}, "run": {"seeds": []}})", ConfigErrorKind::schema,
       "run.seeds"},
      {R"({"env": {"kind": "gridworld"}, "agent": {"kind": "qucb"}, "run": {"seeds": [1, -2]}})",
       ConfigErrorKind::schema, "run.seeds[1]"},
      {R"({"env": {"kind": "gridworld"}, "agent": {"kind": "qucb"}, "density": {"n": 0}})", ConfigErrorKind::schema,
       "density.n"},
      {R"({"env": {"kind": "gridworld"}, "agent": {"kind": "qucb"}, "density": {"min_likelihood": 2, "max_likelihood": 1}})",
       ConfigErrorKind::inconsistent, "density.max_likelihood"},
      {R"({"env": {"kind": "gridworld", "noise": 1.5}, "agent": {"kind": "qucb"}})", ConfigErrorKind::inconsistent,
       "env"},
      {R"({"env": {"kind": "gridworld", "shifts": [{"start": 2}]}, "agent": {"kind": "qucb"}})",
       ConfigErrorKind::inconsistent, "env.shifts[0].start"},
      {R"({"env": {"kind": "gridworld", "shifts": [{"start": 1}, {"start": 1}]}, "agent": {"kind": "qucb"}})",
       ConfigErrorKind::inconsistent, "env.shifts[1].start"},
      {R"({"env": {"kind": "gridworld", "shifts": [{"start": 1}, {"start": 5, "params": {"slip": 0.1}}]}, "agent": {"kind": "qucb"}})",
       ConfigErrorKind::schema, "env.shifts[1].params.slip"},
      {R"({"env": {"kind": "gridworld", "shifts": [{"start": 1}, {"start": 5, "params": {"noise": 1.0}}]}, "agent": {"kind": "qucb"}})",
       ConfigErrorKind::inconsistent, "env.shifts[1]"},
      {R"({"env": {"kind": "gridworld", "shifts": []}, "agent": {"kind": "qucb"}})", ConfigErrorKind::schema,
       "env.shifts"},
      {R"({"env": {"kind": "gridworld"}, "agent": {"kind": "qucb"}, "output": {"dir": ""}})", ConfigErrorKind::schema,
       "output.dir"},
      {R"([1, 2])", ConfigErrorKind::schema, ""},
  };
  for (const Case& c : cases) {
    CAPTURE(c.text);
    const auto e = parse_error(c.text);
    CHECK(e.kind() == c.kind);
    CHECK(e.path() == c.path);
  }
}

TEST_CASE("duplicate seeds are dropped") {
  const auto config =
      parse_config_text(R"({"env": {"kind": "gridworld"}, "agent": {"kind": "qucb"}, "run": {"seeds": [4, 2, 4, 2, 7]}})");
  CHECK(config.run.seeds == std::vector<std::uint64_t>{4, 2, 7});
}

TEST_CASE("file level errors") {
  const auto missing = std::filesystem::temp_directory_path() / "dqucb_no_such_config.json";
  std::filesystem::remove(missing);
  try {
    parse_config(missing);
    FAIL("missing file accepted");
  } catch (const ConfigError& e) {
    CHECK(e.kind() == ConfigErrorKind::missing_file);
  }
  CHECK(parse_error("{\"env\": ").kind() == ConfigErrorKind::malformed_json);
  CHECK(parse_error("").kind() == ConfigErrorKind::malformed_json);

  const auto path = std::filesystem::temp_directory_path() / "dqucb_test_config.json";
  std::ofstream(path) << kFullGrid;
  CHECK(parse_config(path) == parse_config_text(kFullGrid));
  std::filesystem::remove(path);
}

TEST_CASE("fuzzed documents either parse or raise a configuration error") {
  Rng rng(77);
  const json base = json::parse(kFullGrid);
  const std::vector<json> junk{json(nullptr), json(-1), json(1e308), json("x"), json::array(), json::object(),
                               json(true), json(3.5), json::array({1, 2, 3}), json(std::uint64_t{1} << 63)};
  std::size_t parsed = 0, rejected = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    json doc = base;
    const int edits = 1 + static_cast<int>(rng.next() % 3);
    for (int e = 0; e < edits; ++e) {
      // Pick a random location in the flattened document and overwrite it.
      const json flat = doc.flatten();
      auto it = flat.begin();
      std::advance(it, static_cast<long>(rng.next() % flat.size()));
      json::json_pointer ptr(it.key());
      if (rng.next() % 4 == 0 && !ptr.empty()) ptr = ptr.parent_pointer();
      doc[ptr] = junk[rng.next() % junk.size()];
    }
    try {
      parse_config_json(doc);
      ++parsed;
    } catch (const ConfigError&) {
      ++rejected;
    }
  }
  CHECK(parsed + rejected == 3000);
  CHECK(rejected > 0);

  // Random bytes.
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text(rng.next() % 40, ' ');
    for (auto& ch : text) ch = "{}[]\":,0123456789.-eatrufnl \\"[rng.next() % 29];
    try {
      parse_config_text(text);
    } catch (const ConfigError&) {
    }
  }
}
