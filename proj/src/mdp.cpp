#include "dqucb/mdp.hpp"

#include <cmath>
#include <string>

namespace dqucb {

namespace {

constexpr double kRowSumTolerance = 1e-12;

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace

TabularMDP TabularMDP::episodic(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                                std::vector<double> transition, std::vector<double> reward,
                                State initial_state) {
  require(horizon >= 1, "episodic MDP needs horizon >= 1");
  TabularMDP mdp;
  mdp.setting_ = Setting::episodic;
  mdp.num_states_ = num_states;
  mdp.num_actions_ = num_actions;
  mdp.horizon_ = horizon;
  mdp.gamma_ = 1.0;
  mdp.initial_state_ = initial_state;
  mdp.transition_ = std::move(transition);
  mdp.reward_ = std::move(reward);
  mdp.validate_and_index();
  return mdp;
}

TabularMDP TabularMDP::discounted(std::size_t num_states, std::size_t num_actions, double gamma,
                                  std::vector<double> transition, std::vector<double> reward,
                                  State initial_state) {
  require(gamma > 0.0 && gamma < 1.0, "discount must lie in (0,1)");
  TabularMDP mdp;
  mdp.setting_ = Setting::discounted;
  mdp.num_states_ = num_states;
  mdp.num_actions_ = num_actions;
  mdp.horizon_ = 1;
  mdp.gamma_ = gamma;
  mdp.initial_state_ = initial_state;
  mdp.transition_ = std::move(transition);
  mdp.reward_ = std::move(reward);
  mdp.validate_and_index();
  return mdp;
}

void TabularMDP::validate_and_index() {
  require(num_states_ >= 1 && num_actions_ >= 1, "MDP needs at least one state and one action");
  require(initial_state_ < num_states_, "initial state out of range");
  const std::size_t rows_per_kernel = num_states_ * num_actions_;
  const std::size_t kernel_size = rows_per_kernel * num_states_;
  require(transition_.size() == kernel_size ||
              (setting_ == Setting::episodic && transition_.size() == kernel_size * horizon_),
          "transition table has the wrong size");
  require(reward_.size() == rows_per_kernel ||
              (setting_ == Setting::episodic && reward_.size() == rows_per_kernel * horizon_),
          "reward table has the wrong size");
  for (double r : reward_) require(r >= 0.0 && r <= 1.0, "rewards must lie in [0,1]");

  const std::size_t num_rows = transition_.size() / num_states_;
  support_.clear();
  support_offset_.assign(num_rows + 1, 0);
  for (std::size_t row_id = 0; row_id < num_rows; ++row_id) {
    const double* p = transition_.data() + row_id * num_states_;
    double total = 0.0;
    for (std::size_t j = 0; j < num_states_; ++j) {
      require(p[j] >= 0.0 && std::isfinite(p[j]), "transition probabilities must be finite and non-negative");
      total += p[j];
      if (p[j] > 0.0) support_.push_back(static_cast<std::uint32_t>(j));
    }
    if (std::abs(total - 1.0) > kRowSumTolerance) {
      throw std::invalid_argument("transition row " + std::to_string(row_id) + " sums to " + std::to_string(total));
    }
    support_offset_[row_id + 1] = static_cast<std::uint32_t>(support_.size());
  }
}

void TabularMDP::check_indices(std::size_t h, State s, Action a) const {
  if (h >= horizon_ || s >= num_states_ || a >= num_actions_) {
    throw std::invalid_argument("MDP index out of range (h=" + std::to_string(h) + ", s=" + std::to_string(s) +
                                ", a=" + std::to_string(a) + ")");
  }
}

std::size_t TabularMDP::kernel_index(std::size_t h, State s, Action a) const {
  const std::size_t rows_per_kernel = num_states_ * num_actions_;
  const std::size_t kernel = step_homogeneous() ? 0 : h;
  return kernel * rows_per_kernel + s * num_actions_ + a;
}

std::span<const double> TabularMDP::row(std::size_t h, State s, Action a) const {
  check_indices(h, s, a);
  return {transition_.data() + kernel_index(h, s, a) * num_states_, num_states_};
}

std::span<const std::uint32_t> TabularMDP::support(std::size_t h, State s, Action a) const {
  check_indices(h, s, a);
  const std::size_t id = kernel_index(h, s, a);
  return {support_.data() + support_offset_[id], support_offset_[id + 1] - support_offset_[id]};
}

double TabularMDP::reward(std::size_t h, State s, Action a) const {
  check_indices(h, s, a);
  const std::size_t rows_per_kernel = num_states_ * num_actions_;
  const std::size_t layer = reward_.size() == rows_per_kernel ? 0 : h;
  return reward_[layer * rows_per_kernel + s * num_actions_ + a];
}

std::pair<State, double> step_true_mdp(const TabularMDP& mdp, State s, Action a, std::size_t h, Rng& rng) {
  const auto probs = mdp.row(h, s, a);
  const auto support = mdp.support(h, s, a);
  const double u = rng.uniform();
  double cumulative = 0.0;
  State next = support.back();
  for (std::uint32_t j : support) {
    cumulative += probs[j];
    if (u < cumulative) {
      next = j;
      break;
    }
  }
  return {next, mdp.reward(h, s, a)};
}

double learning_rate(std::size_t horizon, std::size_t visit) {
  if (horizon == 0 || visit == 0) throw std::invalid_argument("learning_rate needs H >= 1 and t >= 1");
  return static_cast<double>(horizon + 1) / static_cast<double>(horizon + visit);
}

LearningRateWeights alpha_weights(std::size_t horizon, std::size_t t) {
  if (horizon == 0) throw std::invalid_argument("alpha_weights needs H >= 1");
  LearningRateWeights out;
  out.horizon = horizon;
  out.t = t;
  out.weights.assign(t, 0.0);
  // tail = prod_{j=i+1}^{t} (1 - alpha_j), built from i = t downwards.
  double tail = 1.0;
  for (std::size_t i = t; i >= 1; --i) {
    const double alpha_i = learning_rate(horizon, i);
    out.weights[i - 1] = alpha_i * tail;
    tail *= 1.0 - alpha_i;
  }
  out.initial_weight = tail;
  return out;
}

}  // namespace dqucb
