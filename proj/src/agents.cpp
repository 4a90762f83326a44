#include "dqucb/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dqucb {

double bonus_episodic(double c, std::size_t horizon, double iota, std::size_t t, double likelihood) {
  if (t == 0) throw std::invalid_argument("bonus needs a visit count >= 1");
  if (!(likelihood > 0.0)) throw std::invalid_argument("bonus needs a positive likelihood");
  const double h = static_cast<double>(horizon);
  return c / likelihood * std::sqrt(h * h * h * iota / static_cast<double>(t));
}

double demo_bonus(double scale, double v_max, std::size_t n, double likelihood) {
  if (n == 0) throw std::invalid_argument("bonus needs a visit count >= 1");
  if (!(likelihood > 0.0)) throw std::invalid_argument("bonus needs a positive likelihood");
  const double count = static_cast<double>(n);
  const double raw = scale * std::sqrt(1.0 / count) + v_max / count;
  return std::min(raw, v_max) / likelihood;
}

double iota_episodic(std::size_t num_states, std::size_t num_actions, std::uint64_t episodes, std::size_t horizon,
                     double delta) {
  return std::log(static_cast<double>(num_states) * static_cast<double>(num_actions) *
                  static_cast<double>(episodes) * static_cast<double>(horizon) / delta);
}

double effective_horizon(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  return std::log(2.0 / (1.0 - gamma)) / std::log(1.0 / gamma);
}

double iota_discounted(std::size_t num_states, std::size_t num_actions, std::uint64_t steps, std::uint64_t k) {
  return std::log(static_cast<double>(num_states) * static_cast<double>(num_actions) * static_cast<double>(steps) *
                  static_cast<double>(k + 1) * static_cast<double>(k + 2));
}

double discounted_learning_rate(double horizon, std::size_t k) {
  if (k == 0) throw std::invalid_argument("learning rate needs k >= 1");
  return (horizon + 1.0) / (horizon + static_cast<double>(k));
}

namespace {

void check_episodic(const EpisodicParams& p) {
  if (p.num_states == 0 || p.num_actions == 0 || p.horizon == 0 || p.episodes == 0)
    throw std::invalid_argument("episodic agent needs positive |S|, |A|, H and K");
  if (!(p.c > 0.0)) throw std::invalid_argument("bonus constant c must be positive");
  if (!(p.delta > 0.0 && p.delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
}

void check_discounted(const DiscountedParams& p) {
  if (p.num_states == 0 || p.num_actions == 0 || p.steps == 0)
    throw std::invalid_argument("discounted agent needs positive |S|, |A| and T");
  if (!(p.c > 0.0)) throw std::invalid_argument("bonus constant c must be positive");
  if (!(p.gamma > 0.0 && p.gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
}

}  // namespace

// ---------------------------------------------------------------------------
// Episodic model-free learners

EpisodicQTable::EpisodicQTable(std::size_t num_states, std::size_t num_actions, std::size_t horizon)
    : num_states_(num_states), num_actions_(num_actions), horizon_(horizon),
      q_(horizon * num_states * num_actions, static_cast<double>(horizon)),
      v_((horizon + 1) * num_states, static_cast<double>(horizon)), n_(horizon * num_states * num_actions, 0) {
  std::fill(v_.begin() + static_cast<std::ptrdiff_t>(horizon * num_states), v_.end(), 0.0);
}

Action EpisodicQTable::greedy(std::size_t h, State s) const {
  const double* row = q_.data() + (h * num_states_ + s) * num_actions_;
  Action best = 0;
  for (Action a = 1; a < num_actions_; ++a) {
    if (row[a] > row[best]) best = a;
  }
  return best;
}

std::size_t EpisodicQTable::visit(std::size_t h, State s, Action a) {
  if (h >= horizon_ || s >= num_states_ || a >= num_actions_) throw std::invalid_argument("Q-table index out of range");
  return ++n_[(h * num_states_ + s) * num_actions_ + a];
}

void EpisodicQTable::update(std::size_t h, State s, Action a, std::size_t t, double reward, State next, double bonus) {
  const double alpha = learning_rate(horizon_, t);
  double* row = q_.data() + (h * num_states_ + s) * num_actions_;
  const double target = reward + v_[(h + 1) * num_states_ + next] + bonus;
  row[a] = (1.0 - alpha) * row[a] + alpha * target;
  const double best = *std::max_element(row, row + num_actions_);
  v_[h * num_states_ + s] = std::min(static_cast<double>(horizon_), best);
}

std::vector<Action> EpisodicQTable::greedy_policy() const {
  std::vector<Action> policy(horizon_ * num_states_);
  for (std::size_t h = 0; h < horizon_; ++h) {
    for (State s = 0; s < num_states_; ++s) policy[h * num_states_ + s] = greedy(h, s);
  }
  return policy;
}

EpisodicQucb::EpisodicQucb(const EpisodicParams& params)
    : params_(params),
      iota_((check_episodic(params), iota_episodic(params.num_states, params.num_actions, params.episodes,
                                                    params.horizon, params.delta))),
      table_(params.num_states, params.num_actions, params.horizon) {}

double EpisodicQucb::observe(std::size_t h, State s, Action a, double reward, State next) {
  const std::size_t t = table_.visit(h, s, a);
  const double horizon = static_cast<double>(params_.horizon);
  double bonus;
  if (params_.bonus_form == BonusForm::theory) {
    bonus = params_.c * std::sqrt(horizon * horizon * horizon * iota_ / static_cast<double>(t));
  } else {
    const double v_max = horizon - static_cast<double>(h);
    const double count = static_cast<double>(t);
    bonus = std::min(params_.c * std::sqrt(1.0 / count) + v_max / count, v_max);
  }
  table_.update(h, s, a, t, reward, next, bonus);
  return 1.0;
}

SpaceUsage EpisodicQucb::space() const {
  return {static_cast<std::uint64_t>(params_.num_states * params_.num_actions * params_.horizon), 0};
}

EpisodicDqucb::EpisodicDqucb(const EpisodicParams& params, std::unique_ptr<TransitionLikelihood> likelihood)
    : params_(params),
      iota_((check_episodic(params), iota_episodic(params.num_states, params.num_actions, params.episodes,
                                                    params.horizon, params.delta))),
      table_(params.num_states, params.num_actions, params.horizon), likelihood_(std::move(likelihood)) {
  if (!likelihood_) throw std::invalid_argument("shift-aware agent needs a likelihood model");
}

double EpisodicDqucb::observe(std::size_t h, State s, Action a, double reward, State next) {
  const std::size_t t = table_.visit(h, s, a);
  const double ell = likelihood_->likelihood(h, next, s, a);
  const double bonus =
      params_.bonus_form == BonusForm::theory
          ? bonus_episodic(params_.c, params_.horizon, iota_, t, ell)
          : demo_bonus(params_.c, static_cast<double>(params_.horizon) - static_cast<double>(h), t, ell);
  table_.update(h, s, a, t, reward, next, bonus);
  likelihood_->observe(h, next, s, a);
  return ell;
}

SpaceUsage EpisodicDqucb::space() const {
  const std::uint64_t window = likelihood_->samples();
  return {static_cast<std::uint64_t>(params_.num_states * params_.num_actions * params_.horizon) + window, window};
}

// ---------------------------------------------------------------------------
// Discounted model-free learners

DiscountedQTable::DiscountedQTable(std::size_t num_states, std::size_t num_actions, double gamma)
    : num_states_(num_states), num_actions_(num_actions), gamma_(gamma), horizon_(effective_horizon(gamma)),
      q_(num_states * num_actions, 1.0 / (1.0 - gamma)), q_hat_(num_states * num_actions, 1.0 / (1.0 - gamma)),
      v_hat_(num_states, 1.0 / (1.0 - gamma)), n_(num_states * num_actions, 0) {}

Action DiscountedQTable::greedy(State s) const {
  const double* row = q_.data() + s * num_actions_;
  Action best = 0;
  for (Action a = 1; a < num_actions_; ++a) {
    if (row[a] > row[best]) best = a;
  }
  return best;
}

std::size_t DiscountedQTable::visit(State s, Action a) {
  if (s >= num_states_ || a >= num_actions_) throw std::invalid_argument("Q-table index out of range");
  return ++n_[s * num_actions_ + a];
}

void DiscountedQTable::update(State s, Action a, std::size_t k, double reward, State next, double bonus) {
  const double* hat_row = q_hat_.data() + next * num_actions_;
  v_hat_[next] = *std::max_element(hat_row, hat_row + num_actions_);
  const double alpha = discounted_learning_rate(horizon_, k);
  double& q = q_[s * num_actions_ + a];
  q = (1.0 - alpha) * q + alpha * (reward + gamma_ * v_hat_[next] + bonus);
  double& q_hat = q_hat_[s * num_actions_ + a];
  q_hat = std::min(q_hat, q);
}

std::vector<Action> DiscountedQTable::greedy_policy() const {
  std::vector<Action> policy(num_states_);
  for (State s = 0; s < num_states_; ++s) policy[s] = greedy(s);
  return policy;
}

DiscountedQucb::DiscountedQucb(const DiscountedParams& params)
    : params_((check_discounted(params), params)), table_(params.num_states, params.num_actions, params.gamma) {}

double DiscountedQucb::observe(State s, Action a, double reward, State next) {
  const std::size_t k = table_.visit(s, a);
  double bonus;
  if (params_.bonus_form == BonusForm::theory) {
    const double iota = iota_discounted(params_.num_states, params_.num_actions, params_.steps, k);
    bonus = params_.c / (1.0 - params_.gamma) * std::sqrt(table_.horizon() * iota / static_cast<double>(k));
  } else {
    const double v_max = 1.0 / (1.0 - params_.gamma);
    const double count = static_cast<double>(k);
    bonus = std::min(params_.c * std::sqrt(1.0 / count) + v_max / count, v_max);
  }
  table_.update(s, a, k, reward, next, bonus);
  return 1.0;
}

SpaceUsage DiscountedQucb::space() const {
  return {static_cast<std::uint64_t>(params_.num_states * params_.num_actions), 0};
}

DiscountedDqucb::DiscountedDqucb(const DiscountedParams& params, std::unique_ptr<TransitionLikelihood> likelihood)
    : params_((check_discounted(params), params)), table_(params.num_states, params.num_actions, params.gamma),
      likelihood_(std::move(likelihood)) {
  if (!likelihood_) throw std::invalid_argument("shift-aware agent needs a likelihood model");
}

double DiscountedDqucb::observe(State s, Action a, double reward, State next) {
  const std::size_t k = table_.visit(s, a);
  const double ell = likelihood_->likelihood(0, next, s, a);
  double bonus;
  if (params_.bonus_form == BonusForm::theory) {
    const double iota = iota_discounted(params_.num_states, params_.num_actions, params_.steps, k);
    bonus = params_.c / ((1.0 - params_.gamma) * ell) * std::sqrt(table_.horizon() * iota / static_cast<double>(k));
  } else {
    bonus = demo_bonus(params_.c, 1.0 / (1.0 - params_.gamma), k, ell);
  }
  table_.update(s, a, k, reward, next, bonus);
  likelihood_->observe(0, next, s, a);
  return ell;
}

SpaceUsage DiscountedDqucb::space() const {
  const std::uint64_t window = likelihood_->samples();
  return {static_cast<std::uint64_t>(params_.num_states * params_.num_actions) + window, window};
}

// ---------------------------------------------------------------------------
// UCBVI

EmpiricalModel::EmpiricalModel(std::size_t states, std::size_t actions, std::size_t steps)
    : num_states(states), num_actions(actions), horizon(steps), transitions(steps * states * actions * states, 0),
      visits(steps * states * actions, 0), rewards(steps * states * actions, 0.0) {}

void EmpiricalModel::record(std::size_t h, State s, Action a, double reward, State next) {
  if (h >= horizon || s >= num_states || a >= num_actions || next >= num_states)
    throw std::invalid_argument("empirical model index out of range");
  const std::size_t id = index(h, s, a);
  ++visits[id];
  ++transitions[id * num_states + next];
  rewards[id] = reward;
}

std::vector<double> ucbvi_plan(const EmpiricalModel& model, std::uint64_t episodes, double delta) {
  const std::size_t S = model.num_states;
  const std::size_t A = model.num_actions;
  const std::size_t H = model.horizon;
  const double cap = static_cast<double>(H);
  const double log_term = std::log(static_cast<double>(S) * static_cast<double>(A) * static_cast<double>(episodes) *
                                   static_cast<double>(H) / delta);
  std::vector<double> q(H * S * A, cap);
  std::vector<double> v_next(S, 0.0);
  std::vector<double> v_here(S, 0.0);
  for (std::size_t h = H; h-- > 0;) {
    for (State s = 0; s < S; ++s) {
      double best = 0.0;
      for (Action a = 0; a < A; ++a) {
        const std::size_t id = model.index(h, s, a);
        const std::uint64_t n = model.visits[id];
        double value = cap;
        if (n > 0) {
          const std::uint64_t* counts = model.transitions.data() + id * S;
          double expected = 0.0;
          for (State next = 0; next < S; ++next) expected += static_cast<double>(counts[next]) * v_next[next];
          expected /= static_cast<double>(n);
          const double bonus = cap * std::sqrt(2.0 * log_term / static_cast<double>(n));
          value = std::min(cap, model.rewards[id] + expected + bonus);
        }
        q[id] = value;
        best = std::max(best, value);
      }
      v_here[s] = std::clamp(best, 0.0, cap);
    }
    std::swap(v_next, v_here);
  }
  return q;
}

Ucbvi::Ucbvi(const EpisodicParams& params)
    : params_((check_episodic(params), params)), model_(params.num_states, params.num_actions, params.horizon),
      q_(params.horizon * params.num_states * params.num_actions, static_cast<double>(params.horizon)) {}

Action Ucbvi::act(std::size_t h, State s) const {
  const double* row = q_.data() + model_.index(h, s, 0);
  Action best = 0;
  for (Action a = 1; a < params_.num_actions; ++a) {
    if (row[a] > row[best]) best = a;
  }
  return best;
}

double Ucbvi::observe(std::size_t h, State s, Action a, double reward, State next) {
  model_.record(h, s, a, reward, next);
  return 1.0;
}

void Ucbvi::end_episode() { q_ = ucbvi_plan(model_, params_.episodes, params_.delta); }

std::vector<Action> Ucbvi::greedy_policy() const {
  std::vector<Action> policy(params_.horizon * params_.num_states);
  for (std::size_t h = 0; h < params_.horizon; ++h) {
    for (State s = 0; s < params_.num_states; ++s) policy[h * params_.num_states + s] = act(h, s);
  }
  return policy;
}

SpaceUsage Ucbvi::space() const { return {static_cast<std::uint64_t>(model_.transitions.size()), 0}; }

}  // namespace dqucb
