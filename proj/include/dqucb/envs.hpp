#pragma once

// Shift-scheduled tabular environments: GridWorld, Frozen-Lake and a
// discounted chain, plus random MDPs for property tests.
//
// Grid cells are 1-based (row, col). Grid states are indexed row-major,
// (row-1)*cols + (col-1), followed by one absorbing terminal state. Entering
// the goal cell ends the useful part of an episode: every action taken at the
// goal pays reward 1 and moves to the terminal state, which loops forever
// with zero reward. Total return per episode is therefore at most 1.

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "dqucb/mdp.hpp"

namespace dqucb {

struct Cell {
  int row = 1;
  int col = 1;
  bool operator==(const Cell&) const = default;
  auto operator<=>(const Cell&) const = default;
};

enum GridAction : Action { kLeft = 0, kRight = 1, kUp = 2, kDown = 3 };
inline constexpr std::size_t kGridActions = 4;

/// Episodic unless `gamma` is set.
struct Timing {
  std::size_t horizon = 100;
  std::optional<double> gamma;
  bool operator==(const Timing&) const = default;
};

struct GridWorldSpec {
  int rows = 10;
  int cols = 5;
  Cell start{1, 1};
  Cell goal{10, 5};
  double noise = 0.01;  // mass spread uniformly over existing neighbours
  std::vector<Cell> walls;
  Timing timing;
  bool operator==(const GridWorldSpec&) const = default;
};

struct FrozenLakeSpec {
  int rows = 4;
  int cols = 4;
  Cell start{1, 1};
  Cell goal{4, 4};
  std::vector<Cell> holes{{2, 2}, {2, 4}, {3, 4}, {4, 1}};
  double slip = 0.0;  // split equally between the two perpendicular moves
  Timing timing;
  bool operator==(const FrozenLakeSpec&) const = default;
};

/// States 0..length-1; action 0 steps towards length-1 and action 1 towards 0
/// (swapped when `reversed`). A move succeeds with probability `success` and
/// otherwise leaves the agent in place. Reward 1 is paid in state length-1.
struct ChainSpec {
  int length = 6;
  double success = 0.9;
  bool reversed = false;
  Timing timing{1, 0.9};
  bool operator==(const ChainSpec&) const = default;
};

using EnvSpec = std::variant<GridWorldSpec, FrozenLakeSpec, ChainSpec>;

/// Per-state coordinates fed to the density estimator.
struct StateEncoding {
  std::size_t dims = 1;
  std::vector<double> coords;  // num_states * dims

  std::size_t num_states() const { return dims == 0 ? 0 : coords.size() / dims; }
  const double* of(State s) const { return coords.data() + s * dims; }
};

TabularMDP build_gridworld(const GridWorldSpec& spec);
TabularMDP build_frozenlake(const FrozenLakeSpec& spec);
TabularMDP build_chain(const ChainSpec& spec);
TabularMDP build_mdp(const EnvSpec& spec);

StateEncoding grid_encoding(int rows, int cols);
StateEncoding index_encoding(std::size_t num_states);
StateEncoding state_encoding(const EnvSpec& spec);

/// Grid state index for a 1-based cell.
State grid_state(int cols, Cell cell);

/// Dense random MDP: Dirichlet(1) rows and uniform rewards. `gamma` selects
/// the discounted setting; otherwise one kernel per step over `horizon` steps.
TabularMDP random_mdp(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                      std::optional<double> gamma, Rng& rng);

/// A shift schedule over environment specs with one prebuilt MDP per regime.
/// All regimes must share kind, state space, action space and timing.
class Environment {
 public:
  explicit Environment(ShiftSchedule<EnvSpec> schedule);

  const ShiftSchedule<EnvSpec>& schedule() const { return schedule_; }
  std::size_t num_regimes() const { return schedule_.size(); }
  std::size_t regime_index(std::uint64_t index) const { return schedule_.regime_index(index); }
  const EnvSpec& regime_at(std::uint64_t index) const { return schedule_.regime_at(index); }

  const TabularMDP& mdp(std::size_t regime) const;
  const StateEncoding& encoding() const { return encoding_; }

  std::size_t num_states() const { return mdp(0).num_states(); }
  std::size_t num_actions() const { return mdp(0).num_actions(); }

 private:
  ShiftSchedule<EnvSpec> schedule_;
  StateEncoding encoding_;
  mutable std::vector<std::optional<TabularMDP>> cache_;
};

}  // namespace dqucb
