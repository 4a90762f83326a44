#include "dqucb/envs.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace dqucb {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

struct Delta {
  int drow;
  int dcol;
};

constexpr Delta kMoves[kGridActions] = {{0, -1}, {0, 1}, {-1, 0}, {1, 0}};

class GridGeometry {
 public:
  GridGeometry(int rows, int cols, const std::vector<Cell>& walls) : rows_(rows), cols_(cols) {
    require(rows >= 1 && cols >= 1, "grid needs at least one row and one column");
    blocked_.assign(static_cast<std::size_t>(rows * cols), false);
    for (const Cell& w : walls) {
      require(inside(w), "wall cell outside the grid");
      blocked_[index(w)] = true;
    }
  }

  bool inside(Cell c) const { return c.row >= 1 && c.row <= rows_ && c.col >= 1 && c.col <= cols_; }
  bool open(Cell c) const { return inside(c) && !blocked_[index(c)]; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>((c.row - 1) * cols_ + (c.col - 1)); }
  std::size_t cells() const { return blocked_.size(); }
  std::size_t terminal() const { return cells(); }
  std::size_t num_states() const { return cells() + 1; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Cell cell(std::size_t index) const {
    return {static_cast<int>(index) / cols_ + 1, static_cast<int>(index) % cols_ + 1};
  }

  /// Destination of `direction` from `from`; blocked moves stay in place.
  Cell move(Cell from, Action direction) const {
    const Cell to{from.row + kMoves[direction].drow, from.col + kMoves[direction].dcol};
    return open(to) ? to : from;
  }

 private:
  int rows_;
  int cols_;
  std::vector<bool> blocked_;
};

struct TableBuilder {
  TableBuilder(std::size_t states, std::size_t actions)
      : num_states(states), num_actions(actions), transition(states * actions * states, 0.0),
        reward(states * actions, 0.0) {}

  double& p(State s, Action a, State next) { return transition[(s * num_actions + a) * num_states + next]; }
  double& r(State s, Action a) { return reward[s * num_actions + a]; }

  std::size_t num_states;
  std::size_t num_actions;
  std::vector<double> transition;
  std::vector<double> reward;
};

TabularMDP finish(TableBuilder&& table, const Timing& timing, State start) {
  if (timing.gamma) {
    return TabularMDP::discounted(table.num_states, table.num_actions, *timing.gamma, std::move(table.transition),
                                  std::move(table.reward), start);
  }
  return TabularMDP::episodic(table.num_states, table.num_actions, timing.horizon, std::move(table.transition),
                              std::move(table.reward), start);
}

// Goal pays 1 and exits; the terminal state absorbs with zero reward.
void add_goal_and_terminal(TableBuilder& table, const GridGeometry& grid, Cell goal) {
  const State g = grid.index(goal);
  const State term = grid.terminal();
  for (Action a = 0; a < kGridActions; ++a) {
    table.p(g, a, term) = 1.0;
    table.r(g, a) = 1.0;
    table.p(term, a, term) = 1.0;
  }
}

void require_timing(const Timing& timing) {
  require(timing.horizon >= 1, "horizon must be >= 1");
  if (timing.gamma) require(*timing.gamma > 0.0 && *timing.gamma < 1.0, "gamma must lie in (0,1)");
}

}  // namespace

State grid_state(int cols, Cell cell) { return static_cast<State>((cell.row - 1) * cols + (cell.col - 1)); }

TabularMDP build_gridworld(const GridWorldSpec& spec) {
  require_timing(spec.timing);
  require(spec.noise >= 0.0 && spec.noise < 1.0, "gridworld noise must lie in [0,1)");
  const GridGeometry grid(spec.rows, spec.cols, spec.walls);
  require(grid.open(spec.start), "gridworld start must be an open cell inside the grid");
  require(grid.open(spec.goal), "gridworld goal must be an open cell inside the grid");

  TableBuilder table(grid.num_states(), kGridActions);
  for (std::size_t idx = 0; idx < grid.cells(); ++idx) {
    const Cell here = grid.cell(idx);
    if (here == spec.goal) continue;
    if (!grid.open(here)) {
      for (Action a = 0; a < kGridActions; ++a) table.p(idx, a, idx) = 1.0;
      continue;
    }
    std::vector<State> neighbours;
    for (Action d = 0; d < kGridActions; ++d) {
      const Cell n = grid.move(here, d);
      if (n != here) neighbours.push_back(grid.index(n));
    }
    for (Action a = 0; a < kGridActions; ++a) {
      table.p(idx, a, grid.index(grid.move(here, a))) += 1.0 - spec.noise;
      if (neighbours.empty()) {
        table.p(idx, a, idx) += spec.noise;
      } else {
        const double share = spec.noise / static_cast<double>(neighbours.size());
        for (State n : neighbours) table.p(idx, a, n) += share;
      }
    }
  }
  add_goal_and_terminal(table, grid, spec.goal);
  return finish(std::move(table), spec.timing, grid.index(spec.start));
}

TabularMDP build_frozenlake(const FrozenLakeSpec& spec) {
  require_timing(spec.timing);
  require(spec.slip >= 0.0 && spec.slip <= 1.0, "frozen-lake slip must lie in [0,1]");
  const GridGeometry grid(spec.rows, spec.cols, {});
  require(grid.inside(spec.start) && grid.inside(spec.goal), "frozen-lake start and goal must be inside the grid");
  require(spec.start != spec.goal, "frozen-lake start and goal must differ");
  std::set<Cell> holes;
  for (const Cell& h : spec.holes) {
    require(grid.inside(h), "frozen-lake hole outside the grid");
    require(h != spec.start && h != spec.goal, "frozen-lake holes must not overlap start or goal");
    require(holes.insert(h).second, "frozen-lake holes must be distinct");
  }

  // Perpendicular pairs for left, right, up, down.
  constexpr Action kSide[kGridActions][2] = {{kUp, kDown}, {kUp, kDown}, {kLeft, kRight}, {kLeft, kRight}};
  TableBuilder table(grid.num_states(), kGridActions);
  for (std::size_t idx = 0; idx < grid.cells(); ++idx) {
    const Cell here = grid.cell(idx);
    if (here == spec.goal) continue;
    if (holes.count(here) != 0) {
      for (Action a = 0; a < kGridActions; ++a) table.p(idx, a, idx) = 1.0;
      continue;
    }
    for (Action a = 0; a < kGridActions; ++a) {
      table.p(idx, a, grid.index(grid.move(here, a))) += 1.0 - spec.slip;
      for (Action side : kSide[a]) table.p(idx, a, grid.index(grid.move(here, side))) += spec.slip / 2.0;
    }
  }
  add_goal_and_terminal(table, grid, spec.goal);
  return finish(std::move(table), spec.timing, grid.index(spec.start));
}

TabularMDP build_chain(const ChainSpec& spec) {
  require_timing(spec.timing);
  require(spec.length >= 2, "chain length must be >= 2");
  require(spec.success > 0.0 && spec.success <= 1.0, "chain success probability must lie in (0,1]");
  const auto n = static_cast<std::size_t>(spec.length);
  TableBuilder table(n, 2);
  for (State s = 0; s < n; ++s) {
    const State up = std::min(s + 1, n - 1);
    const State down = s == 0 ? 0 : s - 1;
    for (Action a = 0; a < 2; ++a) {
      const bool towards_end = (a == 0) != spec.reversed;
      table.p(s, a, towards_end ? up : down) += spec.success;
      table.p(s, a, s) += 1.0 - spec.success;
      table.r(s, a) = s == n - 1 ? 1.0 : 0.0;
    }
  }
  return finish(std::move(table), spec.timing, 0);
}

TabularMDP build_mdp(const EnvSpec& spec) {
  return std::visit(
      [](const auto& s) -> TabularMDP {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GridWorldSpec>) return build_gridworld(s);
        else if constexpr (std::is_same_v<T, FrozenLakeSpec>) return build_frozenlake(s);
        else return build_chain(s);
      },
      spec);
}

StateEncoding grid_encoding(int rows, int cols) {
  StateEncoding enc;
  enc.dims = 2;
  for (int r = 1; r <= rows; ++r) {
    for (int c = 1; c <= cols; ++c) {
      enc.coords.push_back(r);
      enc.coords.push_back(c);
    }
  }
  // Terminal sits off the board, diagonally past the far corner.
  enc.coords.push_back(rows + 2);
  enc.coords.push_back(cols + 2);
  return enc;
}

StateEncoding index_encoding(std::size_t num_states) {
  StateEncoding enc;
  enc.dims = 1;
  for (std::size_t s = 0; s < num_states; ++s) enc.coords.push_back(static_cast<double>(s));
  return enc;
}

StateEncoding state_encoding(const EnvSpec& spec) {
  if (const auto* g = std::get_if<GridWorldSpec>(&spec)) return grid_encoding(g->rows, g->cols);
  if (const auto* f = std::get_if<FrozenLakeSpec>(&spec)) return grid_encoding(f->rows, f->cols);
  return index_encoding(static_cast<std::size_t>(std::get<ChainSpec>(spec).length));
}

TabularMDP random_mdp(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                      std::optional<double> gamma, Rng& rng) {
  const std::size_t layers = gamma ? 1 : horizon;
  std::vector<double> transition(layers * num_states * num_actions * num_states);
  std::vector<double> reward(layers * num_states * num_actions);
  for (std::size_t row = 0; row < layers * num_states * num_actions; ++row) {
    double total = 0.0;
    double* p = transition.data() + row * num_states;
    for (std::size_t j = 0; j < num_states; ++j) {
      p[j] = -std::log(1.0 - rng.uniform());
      total += p[j];
    }
    for (std::size_t j = 0; j < num_states; ++j) p[j] /= total;
    // Renormalising can leave the sum a few ulps off 1; fold the residue
    // into the largest entry.
    double sum = 0.0;
    for (std::size_t j = 0; j < num_states; ++j) sum += p[j];
    *std::max_element(p, p + num_states) += 1.0 - sum;
    reward[row] = rng.uniform();
  }
  if (gamma) return TabularMDP::discounted(num_states, num_actions, *gamma, std::move(transition), std::move(reward), 0);
  return TabularMDP::episodic(num_states, num_actions, horizon, std::move(transition), std::move(reward), 0);
}

namespace {

std::size_t spec_kind(const EnvSpec& spec) { return spec.index(); }

const Timing& spec_timing(const EnvSpec& spec) {
  return std::visit([](const auto& s) -> const Timing& { return s.timing; }, spec);
}

}  // namespace

Environment::Environment(ShiftSchedule<EnvSpec> schedule) : schedule_(std::move(schedule)) {
  require(schedule_.size() >= 1, "environment needs at least one regime");
  const EnvSpec& first = schedule_.segments().front().params;
  encoding_ = state_encoding(first);
  cache_.resize(schedule_.size());
  for (std::size_t i = 0; i < schedule_.size(); ++i) {
    const EnvSpec& spec = schedule_.segments()[i].params;
    require(spec_kind(spec) == spec_kind(first), "all regimes must use the same environment kind");
    require(spec_timing(spec) == spec_timing(first), "all regimes must share the same timing");
    const TabularMDP& built = mdp(i);
    require(built.num_states() == encoding_.num_states() && built.num_actions() == mdp(0).num_actions(),
            "all regimes must share state and action spaces");
    require(built.initial_state() == mdp(0).initial_state(), "all regimes must share the initial state");
  }
}

const TabularMDP& Environment::mdp(std::size_t regime) const {
  if (regime >= cache_.size()) throw std::out_of_range("regime index out of range");
  if (!cache_[regime]) cache_[regime] = build_mdp(schedule_.segments()[regime].params);
  return *cache_[regime];
}

}  // namespace dqucb
