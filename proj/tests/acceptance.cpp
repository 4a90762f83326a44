// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Informational lines start with "info".

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "dqucb/commands.hpp"
#include "dqucb/harness.hpp"

using namespace dqucb;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

int failures = 0;

void criterion(int id, const char* name, const std::function<Outcome()>& body) {
  const auto started = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!out.pass) ++failures;
  std::printf("%s %2d %s: %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", id, name, out.detail.c_str(), seconds);
  std::fflush(stdout);
}

void info(const std::string& line) {
  std::printf("info   %s\n", line.c_str());
  std::fflush(stdout);
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

// ---------------------------------------------------------------------------
// 1. learning-rate properties

Outcome learning_rate_suite() {
  std::size_t violations = 0;
  std::string first;
  auto flag = [&](const std::string& what) {
    if (violations++ == 0) first = what;
  };
  const double S = 4, A = 2, T = 10000;
  auto iota = [&](double t) { return std::log(S * A * T * (t + 1.0) * (t + 2.0)); };
  for (std::size_t H : {1u, 10u, 100u}) {
    for (std::size_t t = 1; t <= 10000; ++t) {
      const auto w = alpha_weights(H, t);
      double a = 0.0, top = 0.0, sq = 0.0, d = 0.0, total = 0.0;
      for (std::size_t i = 1; i <= t; ++i) {
        const double x = w.weights[i - 1];
        a += x / std::sqrt(static_cast<double>(i));
        top = std::max(top, x);
        sq += x * x;
        d += x * std::sqrt(iota(static_cast<double>(i)) / static_cast<double>(i));
        total += x;
      }
      const double rt = std::sqrt(static_cast<double>(t));
      const double bound = 2.0 * static_cast<double>(H) / static_cast<double>(t);
      const double it = std::sqrt(iota(static_cast<double>(t)) / static_cast<double>(t));
      if (w.initial_weight != 0.0 || std::abs(total - 1.0) > 1e-12) flag(fmt("weights H=%zu t=%zu", H, t));
      if (a < 1.0 / rt - 1e-12 || a > 2.0 / rt + 1e-12) flag(fmt("(a) H=%zu t=%zu", H, t));
      if (top > bound + 1e-12 || sq > bound + 1e-12) flag(fmt("(b) H=%zu t=%zu", H, t));
      if (d < it - 1e-12 || d > 2.0 * it + 1e-12) flag(fmt("(d) H=%zu t=%zu", H, t));
    }
  }
  double worst_c = 0.0;
  for (std::size_t H : {1u, 10u})
    for (std::size_t i : {1u, 10u, 100u}) {
      double weight = learning_rate(H, i), sum = weight;
      for (std::size_t t = i + 1; t <= i + 100000; ++t) {
        weight *= 1.0 - learning_rate(H, t);
        sum += weight;
      }
      const double err = std::abs(sum - (1.0 + 1.0 / static_cast<double>(H)));
      worst_c = std::max(worst_c, err);
      if (err > 1e-3) flag(fmt("(c) H=%zu i=%zu partial sum off by %.3g", H, i, err));
    }
  // Sequential convex updates reproduce the weighted sum.
  Rng rng(1);
  for (std::size_t H : {1u, 10u, 100u})
    for (std::size_t t : {1u, 7u, 100u, 1000u}) {
      const double init = rng.uniform();
      std::vector<double> targets(t);
      for (auto& x : targets) x = rng.uniform();
      double value = init;
      for (std::size_t i = 1; i <= t; ++i) value += learning_rate(H, i) * (targets[i - 1] - value);
      const auto w = alpha_weights(H, t);
      double weighted = w.initial_weight * init;
      for (std::size_t i = 0; i < t; ++i) weighted += w.weights[i] * targets[i];
      if (std::abs(weighted - value) > 1e-10) flag(fmt("incremental H=%zu t=%zu", H, t));
    }
  if (violations == 0) return {true, fmt("(a),(b),(d) on H in {1,10,100}, t<=1e4; worst (c) error %.3g", worst_c)};
  return {false, fmt("%zu violation(s), first: %s", violations, first.c_str())};
}

// ---------------------------------------------------------------------------
// 2. constant likelihood recovers QUCB

template <typename Agent>
std::vector<Action> roll_episodic(Agent& agent, const TabularMDP& mdp, std::uint64_t episodes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Action> actions;
  for (std::uint64_t k = 0; k < episodes; ++k) {
    State s = mdp.initial_state();
    for (std::size_t h = 0; h < mdp.horizon(); ++h) {
      const Action a = agent.act(h, s);
      actions.push_back(a);
      const auto [next, r] = step_true_mdp(mdp, s, a, h, rng);
      agent.observe(h, s, a, r, next);
      s = next;
    }
    agent.end_episode();
  }
  return actions;
}

template <typename Agent>
std::vector<Action> roll_discounted(Agent& agent, const TabularMDP& mdp, std::uint64_t steps, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Action> actions;
  State s = mdp.initial_state();
  for (std::uint64_t t = 0; t < steps; ++t) {
    const Action a = agent.act(s);
    actions.push_back(a);
    const auto [next, r] = step_true_mdp(mdp, s, a, 0, rng);
    agent.observe(s, a, r, next);
    s = next;
  }
  return actions;
}

Outcome qucb_recovery() {
  std::size_t runs = 0, identical = 0;
  for (std::uint64_t m = 1; m <= 5; ++m) {
    Rng rng(500 + m);
    const auto episodic = random_mdp(6, 3, 8, std::nullopt, rng);
    const auto discounted = random_mdp(6, 3, 1, 0.9, rng);
    for (BonusForm form : {BonusForm::theory, BonusForm::demo})
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const EpisodicParams ep{6, 3, 8, 500, 0.5, 0.1, form};
        EpisodicQucb q(ep);
        EpisodicDqucb d(ep, std::make_unique<ConstantLikelihood>());
        identical += roll_episodic(q, episodic, 500, seed) == roll_episodic(d, episodic, 500, seed);
        const DiscountedParams dp{6, 3, 0.9, 5000, 0.5, form};
        DiscountedQucb dq(dp);
        DiscountedDqucb dd(dp, std::make_unique<ConstantLikelihood>());
        identical += roll_discounted(dq, discounted, 5000, seed) == roll_discounted(dd, discounted, 5000, seed);
        runs += 2;
      }
  }
  return {identical == runs, fmt("%zu/%zu action sequences identical (5 MDPs x 3 seeds x 2 bonus forms x 2 settings)",
                                 identical, runs)};
}

// ---------------------------------------------------------------------------
// 3-5, 9. paired-seed reproductions

ExperimentConfig desk_gridworld(AgentKind kind, BonusForm form) {
  GridWorldSpec before;
  before.rows = 5;
  before.cols = 5;
  before.goal = {5, 5};
  before.noise = 0.01;
  before.timing.horizon = 30;
  GridWorldSpec after = before;
  after.noise = 0.3;
  ExperimentConfig config;
  config.env = ShiftSchedule<EnvSpec>({{1, before}, {4001, after}});
  config.agent.kind = kind;
  config.agent.bonus_form = form;
  config.run.length = 8000;
  config.run.seeds = kSeeds;
  return config;
}

ExperimentConfig desk_frozenlake(AgentKind kind, BonusForm form) {
  FrozenLakeSpec base;
  base.timing.horizon = 100;
  FrozenLakeSpec mid = base, late = base;
  mid.slip = 0.5;
  late.slip = 2.0 / 3.0;
  ExperimentConfig config;
  config.env = ShiftSchedule<EnvSpec>({{1, base}, {4001, mid}, {8001, late}});
  config.agent.kind = kind;
  config.agent.bonus_form = form;
  config.run.length = 12000;
  config.run.seeds = kSeeds;
  return config;
}

ExperimentConfig desk_chain(AgentKind kind, BonusForm form) {
  ChainSpec before;
  ChainSpec after = before;
  after.reversed = true;
  ExperimentConfig config;
  config.env = ShiftSchedule<EnvSpec>({{1, before}, {100001, after}});
  config.agent.kind = kind;
  config.agent.setting = Setting::discounted;
  config.agent.gamma = 0.9;
  config.agent.bonus_form = form;
  config.run.length = 200000;
  config.run.seeds = kSeeds;
  return config;
}

struct Paired {
  Comparison comparison;
  std::size_t wins = 0;
  double mean_dqucb = 0.0;
  double mean_qucb = 0.0;
  std::string describe() const {
    return fmt("DQUCB lower in %zu/10 seeds; mean final regret DQUCB %.6g vs QUCB %.6g (ratio %.4f)", wins, mean_dqucb,
               mean_qucb, mean_dqucb / mean_qucb);
  }
};

Paired paired(const std::function<ExperimentConfig(AgentKind, BonusForm)>& make, BonusForm form) {
  Paired p;
  p.comparison = compare({make(AgentKind::dqucb, form), make(AgentKind::qucb, form)}, {"dqucb", "qucb"});
  p.wins = p.comparison.wins(0);
  p.mean_dqucb = p.comparison.sweeps[0].aggregate.back().mean_cum_regret;
  p.mean_qucb = p.comparison.sweeps[1].aggregate.back().mean_cum_regret;
  return p;
}

double mean_likelihood(const std::vector<RunRecord>& run, std::uint64_t first, std::uint64_t last) {
  double sum = 0.0;
  for (std::uint64_t k = first; k <= last; ++k) sum += run[k - 1].mean_likelihood;
  return sum / static_cast<double>(last - first + 1);
}

Outcome detector_behaviour(const SweepResult& dqucb) {
  // Shift takes effect at episode 4001.
  const std::uint64_t shift = 4001;
  std::size_t dropped = 0, recovered = 0;
  std::string trace;
  for (const auto& run : dqucb.runs) {
    const double pre = mean_likelihood(run, shift - 200, shift - 1);
    const double post = mean_likelihood(run, shift, shift + 200);
    const double late = mean_likelihood(run, shift + 1800, shift + 1999);
    dropped += post < pre;
    recovered += std::abs(late - pre) <= 0.2 * pre;
    if (trace.size() < 200) trace += fmt(" %.3g/%.3g/%.3g", pre, post, late);
  }
  return {dropped >= 9 && recovered >= 9,
          fmt("drop in %zu/10, recovery within 20%% in %zu/10 (pre/post/late:%s ...)", dropped, recovered,
              trace.c_str())};
}

// ---------------------------------------------------------------------------
// 6. optimism

Outcome optimism() {
  double worst_episodic = 1.0, worst_discounted = 1.0;
  for (std::uint64_t seed : kSeeds) {
    Rng mdp_rng(1000 + seed);
    const auto mdp = random_mdp(4, 2, 5, std::nullopt, mdp_rng);
    const auto star = optimal_values_episodic(mdp);
    EpisodicDqucb agent({4, 2, 5, 2000, 2.0, 0.05, BonusForm::theory},
                        std::make_unique<KdeLikelihood>(std::make_shared<const StateEncoding>(index_encoding(4)),
                                                        DensityOptions{}, 5, false));
    Rng rng(seed);
    std::size_t visited = 0, optimistic = 0;
    for (int k = 0; k < 2000; ++k) {
      State s = mdp.initial_state();
      for (std::size_t h = 0; h < 5; ++h) {
        const Action a = agent.act(h, s);
        const auto [next, r] = step_true_mdp(mdp, s, a, h, rng);
        agent.observe(h, s, a, r, next);
        ++visited;
        optimistic += agent.table().q(h, s, a) >= star.action_value(h, s, a) - 1e-9;
        s = next;
      }
      agent.end_episode();
    }
    worst_episodic = std::min(worst_episodic, static_cast<double>(optimistic) / static_cast<double>(visited));
  }
  const auto chain = build_chain(ChainSpec{});
  const auto chain_star = optimal_values_discounted(chain);
  for (std::uint64_t seed : kSeeds) {
    const std::uint64_t steps = 20000;
    DiscountedDqucb agent({6, 2, 0.9, steps, 2.0, BonusForm::theory},
                          std::make_unique<KdeLikelihood>(std::make_shared<const StateEncoding>(index_encoding(6)),
                                                          DensityOptions{}, 1, true));
    Rng rng(seed);
    State s = chain.initial_state();
    std::size_t visited = 0, optimistic = 0;
    for (std::uint64_t t = 0; t < steps; ++t) {
      const Action a = agent.act(s);
      const auto [next, r] = step_true_mdp(chain, s, a, 0, rng);
      agent.observe(s, a, r, next);
      ++visited;
      optimistic += agent.table().q_hat(s, a) >= chain_star.action_value(s, a) - 1e-9;
      s = next;
    }
    worst_discounted = std::min(worst_discounted, static_cast<double>(optimistic) / static_cast<double>(visited));
  }
  return {worst_episodic >= 0.95 && worst_discounted >= 0.95,
          fmt("worst seed: episodic %.4f, discounted %.4f of visited pairs optimistic", worst_episodic,
              worst_discounted)};
}

// ---------------------------------------------------------------------------
// 7. oracle brute force

double enumerate_value(const TabularMDP& mdp, const std::vector<Action>& policy, std::size_t h, State s) {
  if (h == mdp.horizon()) return 0.0;
  const Action a = policy[h * mdp.num_states() + s];
  const auto row = mdp.row(h, s, a);
  double next = 0.0;
  for (State n = 0; n < mdp.num_states(); ++n)
    if (row[n] != 0.0) next += row[n] * enumerate_value(mdp, policy, h + 1, n);
  return mdp.reward(h, s, a) + next;
}

Outcome brute_force() {
  Rng rng(77);
  std::size_t exact = 0;
  double worst = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    const std::size_t S = 1 + rng.next() % 3, A = 1 + rng.next() % 2, H = 1 + rng.next() % 3;
    const auto mdp = random_mdp(S, A, H, std::nullopt, rng);
    const auto star = optimal_values_episodic(mdp);
    std::size_t count = 1;
    for (std::size_t i = 0; i < S * H; ++i) count *= A;
    std::vector<double> best(S, -1.0);
    std::vector<Action> policy(S * H);
    for (std::size_t code = 0; code < count; ++code) {
      std::size_t rest = code;
      for (auto& a : policy) {
        a = static_cast<Action>(rest % A);
        rest /= A;
      }
      for (State s = 0; s < S; ++s) best[s] = std::max(best[s], enumerate_value(mdp, policy, 0, s));
    }
    bool same = true;
    for (State s = 0; s < S; ++s) {
      same = same && best[s] == star.value(0, s);
      worst = std::max(worst, std::abs(best[s] - star.value(0, s)));
    }
    exact += same;
  }
  const auto cycle = TabularMDP::discounted(2, 1, 0.5, {0.0, 1.0, 1.0, 0.0}, {1.0, 0.0}, 0);
  const double err = std::abs(optimal_values_discounted(cycle, 1e-8).value(0) - 4.0 / 3.0);
  return {exact == 100 && err <= 1e-8,
          fmt("%zu/100 instances bit-exact (max diff %.3g); two-state cycle error %.3g", exact, worst, err)};
}

// ---------------------------------------------------------------------------
// 8. complexity

Outcome complexity() {
  std::vector<double> ratios;
  bool counters = true;
  std::string detail;
  for (int side : {5, 10, 20}) {
    GridWorldSpec g;
    g.rows = side;
    g.cols = side;
    g.goal = {side, side};
    g.timing.horizon = 20;
    double micros[2] = {0.0, 0.0};
    for (int which = 0; which < 2; ++which) {
      ExperimentConfig config;
      config.env = ShiftSchedule<EnvSpec>({{1, g}});
      config.agent.kind = which == 0 ? AgentKind::dqucb : AgentKind::ucbvi;
      config.run.length = 500;
      config.run.record_timing = true;
      const auto run = run_experiment(config, 1);
      const std::uint64_t S = static_cast<std::uint64_t>(side * side + 1), A = 4, H = 20;
      double total = 0.0;
      for (const auto& r : run) {
        total += static_cast<double>(r.update_micros);
        if (which == 0) counters = counters && r.cells == S * A * H + r.window_samples && r.window_samples <= 100 * H;
        else counters = counters && r.cells == S * S * A * H;
      }
      micros[which] = total / static_cast<double>(run.size());
    }
    ratios.push_back(micros[1] / std::max(micros[0], 1e-3));
    detail += fmt(" |S|=%d: %.1f/%.1f us", side * side, micros[1], micros[0]);
  }
  const bool monotone = ratios[0] < ratios[1] && ratios[1] < ratios[2];
  return {monotone && counters, fmt("UCBVI/DQUCB update-time ratios %.3g, %.3g, %.3g;%s; counters %s", ratios[0],
                                    ratios[1], ratios[2], detail.c_str(), counters ? "exact" : "MISMATCH")};
}

// ---------------------------------------------------------------------------
// 10. KDE normalisation

Outcome kde_normalisation() {
  Rng rng(2718);
  const auto enc = std::make_shared<const StateEncoding>(grid_encoding(5, 5));
  double worst = 0.0;
  std::size_t good = 0;
  for (int w = 0; w < 20; ++w) {
    DensityOptions options;
    options.bandwidth = 0.3 + 0.7 * rng.uniform();
    DensityWindow window(enc, options);
    const std::size_t n = 1 + rng.next() % 100;
    for (std::size_t i = 0; i < n; ++i)
      window.push(static_cast<State>(rng.next() % 26), static_cast<State>(rng.next() % 25),
                  static_cast<Action>(rng.next() % 4));
    auto joint = encode_joint(*enc, static_cast<State>(rng.next() % 25), static_cast<Action>(rng.next() % 4), 0);
    // The terminal state sits at (7,7); pad six bandwidths beyond [1,7].
    const double pad = 6.0 * options.bandwidth, step = options.bandwidth / 10.0;
    double integral = 0.0;
    for (double r = 1.0 - pad; r <= 7.0 + pad; r += step)
      for (double c = 1.0 - pad; c <= 7.0 + pad; c += step) {
        joint[0] = r;
        joint[1] = c;
        integral += window.conditional_density(joint) * step * step;
      }
    worst = std::max(worst, std::abs(integral - 1.0));
    good += std::abs(integral - 1.0) <= 0.02;
  }
  return {good == 20, fmt("%zu/20 windows integrate to 1 +/- 0.02 (worst error %.2e)", good, worst)};
}

}  // namespace

int main() {
  criterion(1, "learning-rate properties", learning_rate_suite);
  criterion(2, "QUCB recovery", qucb_recovery);

  SweepResult grid_dqucb;
  criterion(3, "GridWorld desk reproduction", [&] {
    Paired p = paired(desk_gridworld, BonusForm::theory);
    grid_dqucb = p.comparison.sweeps[0];
    return Outcome{p.wins >= 8 && p.mean_dqucb <= 0.9 * p.mean_qucb, p.describe()};
  });
  info("GridWorld with the demo bonus: " + paired(desk_gridworld, BonusForm::demo).describe());

  criterion(4, "FrozenLake desk reproduction", [] {
    const Paired p = paired(desk_frozenlake, BonusForm::theory);
    return Outcome{p.wins >= 8, p.describe()};
  });
  info("FrozenLake with the demo bonus: " + paired(desk_frozenlake, BonusForm::demo).describe());

  criterion(5, "likelihood drop and recovery", [&] {
    if (grid_dqucb.runs.empty()) return Outcome{false, "criterion 3 runs unavailable"};
    return detector_behaviour(grid_dqucb);
  });

  criterion(6, "optimism", optimism);
  criterion(7, "oracle brute force", brute_force);
  criterion(8, "complexity", complexity);

  criterion(9, "discounted chain shift", [] {
    const Paired p = paired(desk_chain, BonusForm::theory);
    return Outcome{p.wins >= 8, p.describe()};
  });
  info("chain with the demo bonus: " + paired(desk_chain, BonusForm::demo).describe());

  criterion(10, "KDE normalisation", kde_normalisation);

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
