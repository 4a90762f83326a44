#include "dqucb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>

namespace dqucb {

namespace {

double expected_next(const TabularMDP& mdp, std::size_t h, State s, Action a, const double* v) {
  const auto row = mdp.row(h, s, a);
  double total = 0.0;
  for (const std::uint32_t next : mdp.support(h, s, a)) total += row[next] * v[next];
  return total;
}

void require_discounted(const TabularMDP& mdp) {
  if (mdp.is_episodic()) throw std::invalid_argument("expected a discounted MDP");
}

void require_episodic(const TabularMDP& mdp) {
  if (!mdp.is_episodic()) throw std::invalid_argument("expected an episodic MDP");
}

DiscountedValues solve_policy(const TabularMDP& mdp, const Eigen::MatrixXd& transition, const Eigen::VectorXd& reward,
                              std::size_t regime) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - mdp.gamma() * transition;
  const Eigen::VectorXd solution = system.partialPivLu().solve(reward);

  DiscountedValues out{regime, S, A, std::vector<double>(S), std::vector<double>(S * A)};
  for (std::size_t s = 0; s < S; ++s) out.v[s] = solution[static_cast<Eigen::Index>(s)];
  for (State s = 0; s < S; ++s)
    for (Action a = 0; a < A; ++a)
      out.q[s * A + a] = mdp.reward(0, s, a) + mdp.gamma() * expected_next(mdp, 0, s, a, out.v.data());
  return out;
}

std::vector<Action> greedy_actions(const DiscountedValues& values) {
  std::vector<Action> policy(values.num_states, 0);
  for (State s = 0; s < values.num_states; ++s) {
    const double* q = values.q.data() + s * values.num_actions;
    policy[s] = static_cast<Action>(std::max_element(q, q + values.num_actions) - q);
  }
  return policy;
}

double checked_gap(double optimal, double achieved, std::size_t regime_a, std::size_t regime_b) {
  if (regime_a != regime_b)
    throw std::logic_error("regret invariant violated: oracle and policy values come from different regimes");
  const double gap = optimal - achieved;
  if (gap < -kRegretTolerance) throw std::logic_error("regret invariant violated: policy value exceeds the optimum");
  return std::max(0.0, gap);
}

GapReport min_positive_gap(const std::vector<double>& v, const std::vector<double>& q, std::size_t layers,
                           std::size_t S, std::size_t A) {
  GapReport report;
  for (std::size_t h = 0; h < layers; ++h)
    for (State s = 0; s < S; ++s)
      for (Action a = 0; a < A; ++a) {
        const double gap = v[h * S + s] - q[(h * S + s) * A + a];
        if (gap < kGapZero) continue;
        if (!report.min_gap || gap < *report.min_gap) report.min_gap = gap;
      }
  return report;
}

}  // namespace

EpisodicValues optimal_values_episodic(const TabularMDP& mdp, std::size_t regime) {
  require_episodic(mdp);
  const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  EpisodicValues out{regime, S, A, H, std::vector<double>((H + 1) * S, 0.0), std::vector<double>(H * S * A, 0.0)};
  for (std::size_t h = H; h-- > 0;) {
    const double* next_v = out.v.data() + (h + 1) * S;
    for (State s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (Action a = 0; a < A; ++a) {
        const double q = mdp.reward(h, s, a) + expected_next(mdp, h, s, a, next_v);
        out.q[(h * S + s) * A + a] = q;
        best = std::max(best, q);
      }
      out.v[h * S + s] = best;
    }
  }
  return out;
}

EpisodicValues policy_value_episodic(const TabularMDP& mdp, std::span<const Action> policy, std::size_t regime) {
  require_episodic(mdp);
  const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  if (policy.size() != H * S) throw std::invalid_argument("episodic policy must have H * S entries");
  EpisodicValues out{regime, S, A, H, std::vector<double>((H + 1) * S, 0.0), std::vector<double>(H * S * A, 0.0)};
  for (std::size_t h = H; h-- > 0;) {
    const double* next_v = out.v.data() + (h + 1) * S;
    for (State s = 0; s < S; ++s) {
      for (Action a = 0; a < A; ++a)
        out.q[(h * S + s) * A + a] = mdp.reward(h, s, a) + expected_next(mdp, h, s, a, next_v);
      const Action chosen = policy[h * S + s];
      if (chosen >= A) throw std::invalid_argument("policy action out of range");
      out.v[h * S + s] = out.q[(h * S + s) * A + chosen];
    }
  }
  return out;
}

DiscountedValues optimal_values_discounted(const TabularMDP& mdp, double tol, std::size_t regime) {
  require_discounted(mdp);
  if (!(tol > 0.0)) throw std::invalid_argument("value iteration tolerance must be positive");
  const std::size_t S = mdp.num_states(), A = mdp.num_actions();
  const double gamma = mdp.gamma();
  const double stop = tol * (1.0 - gamma) / (2.0 * gamma);

  DiscountedValues out{regime, S, A, std::vector<double>(S, 0.0), std::vector<double>(S * A, 0.0)};
  std::vector<double> next(S);
  for (;;) {
    double change = 0.0;
    for (State s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (Action a = 0; a < A; ++a) {
        const double q = mdp.reward(0, s, a) + gamma * expected_next(mdp, 0, s, a, out.v.data());
        out.q[s * A + a] = q;
        best = std::max(best, q);
      }
      next[s] = best;
      change = std::max(change, std::abs(best - out.v[s]));
    }
    out.v.swap(next);
    if (change <= stop) break;
  }
  for (State s = 0; s < S; ++s)
    for (Action a = 0; a < A; ++a)
      out.q[s * A + a] = mdp.reward(0, s, a) + gamma * expected_next(mdp, 0, s, a, out.v.data());

  // Policy iteration from the value-iteration greedy policy removes the
  // residual tolerance, so V* is exact up to the linear solve.
  std::vector<Action> policy = greedy_actions(out);
  for (int iteration = 0; iteration < 100; ++iteration) {
    DiscountedValues exact = policy_value_discounted(mdp, policy, regime);
    std::vector<Action> improved = policy;
    for (State s = 0; s < S; ++s) {
      const double* q = exact.q.data() + s * A;
      const double current = q[policy[s]];
      for (Action a = 0; a < A; ++a)
        if (q[a] > current + 1e-13 * std::max(1.0, std::abs(current)) && q[a] > q[improved[s]]) improved[s] = a;
    }
    if (improved == policy) {
      for (State s = 0; s < S; ++s) {
        const double* q = exact.q.data() + s * A;
        exact.v[s] = *std::max_element(q, q + A);
      }
      return exact;
    }
    policy = std::move(improved);
  }
  return out;
}

DiscountedValues policy_value_discounted(const TabularMDP& mdp, std::span<const Action> policy, std::size_t regime) {
  require_discounted(mdp);
  const std::size_t S = mdp.num_states();
  if (policy.size() != S) throw std::invalid_argument("discounted policy must have S entries");
  Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(S, S);
  Eigen::VectorXd reward(S);
  for (State s = 0; s < S; ++s) {
    const Action a = policy[s];
    if (a >= mdp.num_actions()) throw std::invalid_argument("policy action out of range");
    const auto row = mdp.row(0, s, a);
    for (const std::uint32_t next : mdp.support(0, s, a)) transition(s, next) = row[next];
    reward[static_cast<Eigen::Index>(s)] = mdp.reward(0, s, a);
  }
  return solve_policy(mdp, transition, reward, regime);
}

DiscountedValues policy_value_discounted(const TabularMDP& mdp, std::span<const double> policy, std::size_t regime) {
  require_discounted(mdp);
  const std::size_t S = mdp.num_states(), A = mdp.num_actions();
  if (policy.size() != S * A) throw std::invalid_argument("stochastic policy must have S * A entries");
  Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(S, S);
  Eigen::VectorXd reward = Eigen::VectorXd::Zero(S);
  for (State s = 0; s < S; ++s) {
    double mass = 0.0;
    for (Action a = 0; a < A; ++a) {
      const double w = policy[s * A + a];
      if (!(w >= 0.0)) throw std::invalid_argument("policy probabilities must be non-negative");
      mass += w;
      if (w == 0.0) continue;
      const auto row = mdp.row(0, s, a);
      for (const std::uint32_t next : mdp.support(0, s, a)) transition(s, next) += w * row[next];
      reward[static_cast<Eigen::Index>(s)] += w * mdp.reward(0, s, a);
    }
    if (std::abs(mass - 1.0) > 1e-9) throw std::invalid_argument("policy probabilities must sum to 1 per state");
  }
  return solve_policy(mdp, transition, reward, regime);
}

double episode_regret(const EpisodicValues& optimal, const EpisodicValues& policy, State s1) {
  return checked_gap(optimal.value(0, s1), policy.value(0, s1), optimal.regime, policy.regime);
}

double step_regret_discounted(const DiscountedValues& optimal, const DiscountedValues& policy, State s) {
  return checked_gap(optimal.value(s), policy.value(s), optimal.regime, policy.regime);
}

double theory_bound_episodic(std::size_t horizon, std::size_t num_states, std::size_t num_actions,
                             std::uint64_t episodes, double delta, double epsilon) {
  if (horizon == 0 || num_states == 0 || num_actions == 0 || episodes == 0)
    throw std::invalid_argument("bound arguments must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
  const double H = static_cast<double>(horizon);
  const double sak = static_cast<double>(num_states) * static_cast<double>(num_actions) * static_cast<double>(episodes);
  const double scale = 1.0 + epsilon;
  return std::sqrt(std::pow(H, 5) * scale * scale * sak * std::log(sak * H / delta));
}

double theory_bound_discounted(std::size_t num_states, std::size_t num_actions, double gamma, std::uint64_t steps,
                               double min_gap, double min_gap_bar, double epsilon) {
  if (!(min_gap > 0.0) || !(min_gap_bar > 0.0)) throw std::invalid_argument("gap-dependent bound undefined");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  if (num_states == 0 || num_actions == 0 || steps == 0) throw std::invalid_argument("bound arguments must be positive");
  const double gap = std::min(min_gap, min_gap_bar);
  const double sa = static_cast<double>(num_states) * static_cast<double>(num_actions);
  const double lead = sa * (1.0 + epsilon) / (std::pow(1.0 - gamma, 6) * gap);
  return lead * std::log(sa * static_cast<double>(steps) / ((1.0 - gamma) * gap));
}

std::string GapReport::describe() const { return min_gap ? format_real(*min_gap) : "none"; }

GapReport gap_report(const DiscountedValues& optimal) {
  return min_positive_gap(optimal.v, optimal.q, 1, optimal.num_states, optimal.num_actions);
}

GapReport gap_report(const EpisodicValues& optimal) {
  return min_positive_gap(optimal.v, optimal.q, optimal.horizon, optimal.num_states, optimal.num_actions);
}

std::unique_ptr<EpisodicAgent> make_episodic_agent(const ExperimentConfig& config, const Environment& env) {
  const TabularMDP& mdp = env.mdp(0);
  EpisodicParams params{mdp.num_states(), mdp.num_actions(), mdp.horizon(), config.run.length,
                        config.agent.c,   config.agent.delta, config.agent.bonus_form};
  switch (config.agent.kind) {
    case AgentKind::qucb: return std::make_unique<EpisodicQucb>(params);
    case AgentKind::ucbvi: return std::make_unique<Ucbvi>(params);
    case AgentKind::dqucb: {
      auto encoding = std::make_shared<const StateEncoding>(env.encoding());
      auto likelihood = std::make_unique<KdeLikelihood>(std::move(encoding), config.density.options, mdp.horizon(),
                                                        config.density.pooled);
      return std::make_unique<EpisodicDqucb>(params, std::move(likelihood));
    }
  }
  throw std::invalid_argument("unknown agent kind");
}

std::unique_ptr<DiscountedAgent> make_discounted_agent(const ExperimentConfig& config, const Environment& env) {
  const TabularMDP& mdp = env.mdp(0);
  DiscountedParams params{mdp.num_states(), mdp.num_actions(), mdp.gamma(), config.run.length, config.agent.c,
                          config.agent.bonus_form};
  switch (config.agent.kind) {
    case AgentKind::qucb: return std::make_unique<DiscountedQucb>(params);
    case AgentKind::dqucb: {
      auto encoding = std::make_shared<const StateEncoding>(env.encoding());
      auto likelihood = std::make_unique<KdeLikelihood>(std::move(encoding), config.density.options, 1, true);
      return std::make_unique<DiscountedDqucb>(params, std::move(likelihood));
    }
    case AgentKind::ucbvi: break;
  }
  throw std::invalid_argument("agent kind has no discounted variant");
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<RunRecord> run_episodic(const ExperimentConfig& config, const Environment& env, std::uint64_t seed) {
  auto agent = make_episodic_agent(config, env);
  Rng rng(seed);
  const std::size_t H = env.mdp(0).horizon();
  const State s1 = env.mdp(0).initial_state();
  const bool timing = config.run.record_timing;

  std::vector<std::optional<EpisodicValues>> optimal(env.num_regimes());
  std::optional<EpisodicValues> evaluated;  // V^pi of `snapshot` under its regime
  std::vector<Action> snapshot;

  std::vector<RunRecord> records;
  records.reserve(config.run.length);
  double cumulative = 0.0;
  for (std::uint64_t k = 1; k <= config.run.length; ++k) {
    const std::size_t regime = env.regime_index(k);
    const TabularMDP& mdp = env.mdp(regime);
    if (!optimal[regime]) optimal[regime] = optimal_values_episodic(mdp, regime);

    // Re-evaluate only when the greedy policy or the regime changed.
    std::vector<Action> policy = agent->greedy_policy();
    if (!evaluated || evaluated->regime != regime || policy != snapshot) {
      evaluated = policy_value_episodic(mdp, policy, regime);
      snapshot = std::move(policy);
    }
    const double regret = episode_regret(*optimal[regime], *evaluated, s1);

    double likelihood_sum = 0.0;
    std::chrono::nanoseconds spent{0};
    State s = s1;
    for (std::size_t h = 0; h < H; ++h) {
      const Action a = agent->act(h, s);
      const auto [next, reward] = step_true_mdp(mdp, s, a, h, rng);
      const auto started = timing ? Clock::now() : Clock::time_point{};
      likelihood_sum += agent->observe(h, s, a, reward, next);
      if (timing) spent += Clock::now() - started;
      s = next;
    }
    const auto started = timing ? Clock::now() : Clock::time_point{};
    agent->end_episode();
    if (timing) spent += Clock::now() - started;

    cumulative += regret;
    const SpaceUsage space = agent->space();
    records.push_back({k, regime, regret, cumulative, likelihood_sum / static_cast<double>(H),
                       timing ? std::chrono::duration_cast<std::chrono::microseconds>(spent).count() : 0, space.cells,
                       space.window_samples});
  }
  return records;
}

std::vector<RunRecord> run_discounted(const ExperimentConfig& config, const Environment& env, std::uint64_t seed) {
  auto agent = make_discounted_agent(config, env);
  Rng rng(seed);
  const std::uint64_t stride = effective_eval_stride(config);
  const bool timing = config.run.record_timing;

  std::vector<std::optional<DiscountedValues>> optimal(env.num_regimes());
  std::optional<DiscountedValues> evaluated;
  std::vector<Action> snapshot;

  std::vector<RunRecord> records;
  records.reserve(config.run.length);
  double cumulative = 0.0;
  State s = env.mdp(0).initial_state();
  for (std::uint64_t t = 1; t <= config.run.length; ++t) {
    const std::size_t regime = env.regime_index(t);
    const TabularMDP& mdp = env.mdp(regime);
    if (!optimal[regime]) optimal[regime] = optimal_values_discounted(mdp, 1e-10, regime);

    // The snapshot is refreshed every `stride` steps and on every regime change.
    if (!evaluated || evaluated->regime != regime || (t - 1) % stride == 0) {
      std::vector<Action> policy = agent->greedy_policy();
      if (!evaluated || evaluated->regime != regime || policy != snapshot) {
        evaluated = policy_value_discounted(mdp, policy, regime);
        snapshot = std::move(policy);
      }
    }
    const double regret = step_regret_discounted(*optimal[regime], *evaluated, s);

    const Action a = agent->act(s);
    const auto [next, reward] = step_true_mdp(mdp, s, a, 0, rng);
    const auto started = timing ? Clock::now() : Clock::time_point{};
    const double likelihood = agent->observe(s, a, reward, next);
    const auto spent = timing ? Clock::now() - started : Clock::duration{0};
    s = next;

    cumulative += regret;
    const SpaceUsage space = agent->space();
    records.push_back({t, regime, regret, cumulative, likelihood,
                       timing ? std::chrono::duration_cast<std::chrono::microseconds>(spent).count() : 0, space.cells,
                       space.window_samples});
  }
  return records;
}

}  // namespace

std::vector<RunRecord> run_experiment(const ExperimentConfig& config, std::uint64_t seed) {
  const Environment env(config.env);
  if (config.agent.setting == Setting::episodic) {
    if (!env.mdp(0).is_episodic()) throw std::invalid_argument("episodic agent needs an episodic environment");
    return run_episodic(config, env, seed);
  }
  if (env.mdp(0).is_episodic()) throw std::invalid_argument("discounted agent needs a discounted environment");
  return run_discounted(config, env, seed);
}

std::vector<AggregateRow> aggregate_runs(const std::vector<std::vector<RunRecord>>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregation needs at least one run");
  const std::size_t length = runs.front().size();
  for (const auto& run : runs)
    if (run.size() != length) throw std::invalid_argument("runs to aggregate must have equal length");
  const double n = static_cast<double>(runs.size());
  std::vector<AggregateRow> rows(length);
  for (std::size_t i = 0; i < length; ++i) {
    // Welford: identical runs give exactly zero spread.
    double mean = 0.0, ss = 0.0, count = 0.0;
    for (const auto& run : runs) {
      const double x = run[i].cum_regret;
      count += 1.0;
      const double delta = x - mean;
      mean += delta / count;
      ss += delta * (x - mean);
    }
    rows[i] = {runs.front()[i].index, mean, runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0, runs.size()};
  }
  return rows;
}

std::size_t sweep_threads() {
  const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
  if (const char* raw = std::getenv("DQUCB_THREADS")) {
    char* end = nullptr;
    const unsigned long value = std::strtoul(raw, &end, 10);
    if (end != raw && *end == '\0' && value > 0) return value;
  }
  return hardware;
}

SweepResult sweep(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds, std::size_t threads) {
  if (seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
  SweepResult result;
  result.seeds = seeds;
  result.runs.resize(seeds.size());
  const std::size_t workers = std::min(seeds.size(), threads == 0 ? sweep_threads() : threads);

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(seeds.size());
  auto work = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        result.runs[i] = run_experiment(config, seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& thread : pool) thread.join();
  }
  for (const auto& error : errors)
    if (error) std::rethrow_exception(error);
  result.aggregate = aggregate_runs(result.runs);
  return result;
}

std::string format_real(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.9g", value);
  return buffer;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void write_run_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
  std::ofstream out = open_output(path);
  out << kRunCsvHeader << '\n';
  for (const RunRecord& r : records) {
    out << r.index << ',' << r.regime << ',' << format_real(r.regret) << ',' << format_real(r.cum_regret) << ','
        << format_real(r.mean_likelihood) << ',' << r.update_micros << ',' << r.cells << ',' << r.window_samples
        << '\n';
  }
  finish(out, path);
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows) {
  std::ofstream out = open_output(path);
  out << kAggregateCsvHeader << '\n';
  for (const AggregateRow& r : rows)
    out << r.index << ',' << format_real(r.mean_cum_regret) << ',' << format_real(r.std_cum_regret) << ','
        << r.n_seeds << '\n';
  finish(out, path);
}

}  // namespace dqucb
