#pragma once

// Ground-truth tabular MDPs, piecewise-constant shift schedules and the
// learning-rate arithmetic shared by the Q-learning agents.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dqucb {

using State = std::size_t;
using Action = std::size_t;

enum class Setting { episodic, discounted };

/// 64-bit seeded generator. `uniform()` uses the top 53 bits of the raw
/// output so sampled trajectories are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// A finite MDP with deterministic rewards in [0,1].
///
/// Episodic MDPs carry a horizon H and either one kernel per step or a single
/// step-homogeneous kernel. Discounted MDPs carry gamma and a single kernel.
/// Steps are 0-based: h ranges over [0, H). Kernels are stored dense and
/// row-major as [kernel][s][a][s'].
class TabularMDP {
 public:
  /// `transition` holds either S*A*S entries (step-homogeneous) or H*S*A*S;
  /// `reward` holds either S*A or H*S*A entries, independently.
  static TabularMDP episodic(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                             std::vector<double> transition, std::vector<double> reward,
                             State initial_state);

  static TabularMDP discounted(std::size_t num_states, std::size_t num_actions, double gamma,
                               std::vector<double> transition, std::vector<double> reward,
                               State initial_state);

  Setting setting() const { return setting_; }
  bool is_episodic() const { return setting_ == Setting::episodic; }
  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  /// H for episodic MDPs, 1 for discounted ones.
  std::size_t horizon() const { return horizon_; }
  /// gamma for discounted MDPs, 1 for episodic ones.
  double gamma() const { return gamma_; }
  State initial_state() const { return initial_state_; }
  bool step_homogeneous() const { return transition_.size() == row_stride() * num_states_ * num_actions_; }

  std::span<const double> row(std::size_t h, State s, Action a) const;
  double probability(std::size_t h, State s, Action a, State next) const { return row(h, s, a)[next]; }
  double reward(std::size_t h, State s, Action a) const;

  /// Indices with non-zero probability in `row(h, s, a)`, ascending.
  std::span<const std::uint32_t> support(std::size_t h, State s, Action a) const;

 private:
  TabularMDP() = default;
  void validate_and_index();
  std::size_t row_stride() const { return num_states_; }
  std::size_t kernel_index(std::size_t h, State s, Action a) const;
  void check_indices(std::size_t h, State s, Action a) const;

  Setting setting_ = Setting::episodic;
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::size_t horizon_ = 1;
  double gamma_ = 1.0;
  State initial_state_ = 0;
  std::vector<double> transition_;
  std::vector<double> reward_;
  std::vector<std::uint32_t> support_;
  std::vector<std::uint32_t> support_offset_;
};

/// Samples s' from P_h(.|s,a) by inverse CDF and reads r_h(s,a).
std::pair<State, double> step_true_mdp(const TabularMDP& mdp, State s, Action a, std::size_t h, Rng& rng);

/// Piecewise-constant map from a 1-based episode or step index to the
/// parameters of the regime in force.
template <typename Params>
class ShiftSchedule {
 public:
  struct Segment {
    std::uint64_t start = 1;
    Params params{};
    bool operator==(const Segment&) const = default;
  };

  ShiftSchedule() = default;

  explicit ShiftSchedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw std::invalid_argument("shift schedule needs at least one segment");
    if (segments_.front().start != 1) throw std::invalid_argument("first segment must start at index 1");
    for (std::size_t i = 1; i < segments_.size(); ++i) {
      if (segments_[i].start <= segments_[i - 1].start)
        throw std::invalid_argument("segment starts must be strictly increasing");
    }
  }

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }

  /// Position of the last segment whose start is <= index.
  std::size_t regime_index(std::uint64_t index) const {
    std::size_t found = 0;
    for (std::size_t i = 1; i < segments_.size() && segments_[i].start <= index; ++i) found = i;
    return found;
  }

  const Params& regime_at(std::uint64_t index) const { return segments_[regime_index(index)].params; }

  bool operator==(const ShiftSchedule&) const = default;

 private:
  std::vector<Segment> segments_;
};

/// alpha_t = (H+1)/(H+t).
double learning_rate(std::size_t horizon, std::size_t visit);

struct LearningRateWeights {
  std::size_t horizon = 1;
  std::size_t t = 0;
  double initial_weight = 1.0;  // alpha_t^0
  std::vector<double> weights;  // alpha_t^i for i = 1..t, stored at [i-1]
};

/// Materializes alpha_t^0 and alpha_t^i. Agents never call this; they use the
/// incremental update, which is algebraically the same weighting.
LearningRateWeights alpha_weights(std::size_t horizon, std::size_t t);

}  // namespace dqucb
