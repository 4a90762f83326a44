#pragma once

// Ground-truth oracles, regret accounting, reference bound curves and the
// multi-seed experiment loop.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dqucb/agents.hpp"
#include "dqucb/config.hpp"
#include "dqucb/envs.hpp"
#include "dqucb/mdp.hpp"

namespace dqucb {

/// Value tables of an episodic MDP, tagged with the regime they describe.
/// v is (H+1)*S with the last layer 0; q is H*S*A.
struct EpisodicValues {
  std::size_t regime = 0;
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t horizon = 0;
  std::vector<double> v;
  std::vector<double> q;

  double value(std::size_t h, State s) const { return v[h * num_states + s]; }
  double action_value(std::size_t h, State s, Action a) const { return q[(h * num_states + s) * num_actions + a]; }
};

/// Value tables of a discounted MDP: v is S, q is S*A.
struct DiscountedValues {
  std::size_t regime = 0;
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> v;
  std::vector<double> q;

  double value(State s) const { return v[s]; }
  double action_value(State s, Action a) const { return q[s * num_actions + a]; }
};

/// Backward induction: V*_{H+1} = 0, Q*_h = r_h + P_h V*_{h+1}, V*_h = max_a Q*_h.
EpisodicValues optimal_values_episodic(const TabularMDP& mdp, std::size_t regime = 0);
/// Backward induction under a deterministic policy laid out as h * S + s.
EpisodicValues policy_value_episodic(const TabularMDP& mdp, std::span<const Action> policy, std::size_t regime = 0);

/// Value iteration until the sup-norm change is <= tol (1-gamma) / (2 gamma),
/// then polished by exact policy iteration on the greedy policy.
DiscountedValues optimal_values_discounted(const TabularMDP& mdp, double tol = 1e-10, std::size_t regime = 0);
/// Exact evaluation by solving (I - gamma P_pi) V = r_pi.
DiscountedValues policy_value_discounted(const TabularMDP& mdp, std::span<const Action> policy,
                                         std::size_t regime = 0);
/// Stochastic policy given as S*A action probabilities.
DiscountedValues policy_value_discounted(const TabularMDP& mdp, std::span<const double> policy,
                                         std::size_t regime = 0);

/// Largest negative regret tolerated as floating-point noise.
inline constexpr double kRegretTolerance = 1e-9;

/// V*_1(s1) - V^pi_1(s1), clamped at 0. Throws std::logic_error when the two
/// tables describe different regimes or the gap is below -kRegretTolerance.
double episode_regret(const EpisodicValues& optimal, const EpisodicValues& policy, State s1);
/// (V* - V^pi)(s), with the same tolerance and regime checks.
double step_regret_discounted(const DiscountedValues& optimal, const DiscountedValues& policy, State s);

/// sqrt(H^5 (1+eps)^2 |S||A| K log(|S||A| K H / delta)), unit constant.
double theory_bound_episodic(std::size_t horizon, std::size_t num_states, std::size_t num_actions,
                             std::uint64_t episodes, double delta, double epsilon);
/// |S||A|(1+eps) / ((1-gamma)^6 g) * log(|S||A| T / ((1-gamma) g)), g = min(gap, gap_bar), unit constant.
double theory_bound_discounted(std::size_t num_states, std::size_t num_actions, double gamma, std::uint64_t steps,
                               double min_gap, double min_gap_bar, double epsilon);

/// Minimum positive sub-optimality gap; empty when every action is optimal.
struct GapReport {
  std::optional<double> min_gap;
  std::string describe() const;
};

inline constexpr double kGapZero = 1e-10;

GapReport gap_report(const DiscountedValues& optimal);
/// Minimum over steps h of V*_h(s) - Q*_h(s,a).
GapReport gap_report(const EpisodicValues& optimal);

struct RunRecord {
  std::uint64_t index = 0;
  std::size_t regime = 0;
  double regret = 0.0;
  double cum_regret = 0.0;
  double mean_likelihood = 1.0;
  std::int64_t update_micros = 0;
  std::uint64_t cells = 0;
  std::uint64_t window_samples = 0;
  bool operator==(const RunRecord&) const = default;
};

std::unique_ptr<EpisodicAgent> make_episodic_agent(const ExperimentConfig& config, const Environment& env);
std::unique_ptr<DiscountedAgent> make_discounted_agent(const ExperimentConfig& config, const Environment& env);

/// One record per episode (episodic) or step (discounted). Deterministic in
/// (config, seed) except for update_micros when run.record_timing is set.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config, std::uint64_t seed);

struct AggregateRow {
  std::uint64_t index = 0;
  double mean_cum_regret = 0.0;
  double std_cum_regret = 0.0;  // sample standard deviation, 0 for one seed
  std::size_t n_seeds = 0;
};

struct SweepResult {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<RunRecord>> runs;  // aligned with seeds
  std::vector<AggregateRow> aggregate;
};

std::vector<AggregateRow> aggregate_runs(const std::vector<std::vector<RunRecord>>& runs);

/// Runs every seed, in parallel up to `threads` workers (0 reads
/// DQUCB_THREADS, defaulting to the number of logical processors).
SweepResult sweep(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds, std::size_t threads = 0);

std::size_t sweep_threads();

std::string format_real(double value);
void write_run_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records);
void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows);

inline constexpr const char* kRunCsvHeader =
    "index,regime,regret,cum_regret,mean_likelihood,update_micros,cells,window_samples";
inline constexpr const char* kAggregateCsvHeader = "index,mean_cum_regret,std_cum_regret,n_seeds";

}  // namespace dqucb
