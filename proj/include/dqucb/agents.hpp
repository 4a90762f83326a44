#pragma once

// Optimistic tabular learners.
//
//   EpisodicDqucb / DiscountedDqucb  Q-learning with a UCB bonus scaled by the
//                                    inverse conditional likelihood of the
//                                    observed transition.
//   EpisodicQucb / DiscountedQucb    the same learners without the likelihood.
//   Ucbvi                            model-based optimistic value iteration
//                                    with a Hoeffding bonus (episodic only).
//
// All tables are 0-based in the step index h.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "dqucb/density.hpp"
#include "dqucb/mdp.hpp"

namespace dqucb {

enum class BonusForm { theory, demo };

/// b_t = (c / likelihood) * sqrt(H^3 iota / t).
double bonus_episodic(double c, std::size_t horizon, double iota, std::size_t t, double likelihood);
/// min(scale * sqrt(1/n) + v_max / n, v_max) / likelihood.
double demo_bonus(double scale, double v_max, std::size_t n, double likelihood);
/// log(|S||A| K H / delta).
double iota_episodic(std::size_t num_states, std::size_t num_actions, std::uint64_t episodes, std::size_t horizon,
                     double delta);
/// ln(2/(1-gamma)) / ln(1/gamma).
double effective_horizon(double gamma);
/// log(|S||A| T (k+1)(k+2)).
double iota_discounted(std::size_t num_states, std::size_t num_actions, std::uint64_t steps, std::uint64_t k);
/// (H+1)/(H+k) for a real-valued effective horizon.
double discounted_learning_rate(double horizon, std::size_t k);

/// Storage proxies reported per record.
struct SpaceUsage {
  std::uint64_t cells = 0;
  std::uint64_t window_samples = 0;
};

/// Source of p(s'|s,a) for the shift-aware learners.
class TransitionLikelihood {
 public:
  virtual ~TransitionLikelihood() = default;
  virtual double likelihood(std::size_t h, State next, State s, Action a) const = 0;
  virtual void observe(std::size_t h, State next, State s, Action a) = 0;
  virtual std::size_t samples() const = 0;
};

class KdeLikelihood final : public TransitionLikelihood {
 public:
  KdeLikelihood(std::shared_ptr<const StateEncoding> encoding, DensityOptions options, std::size_t horizon,
                bool pooled)
      : density_(std::move(encoding), options, horizon, pooled) {}

  double likelihood(std::size_t h, State next, State s, Action a) const override {
    return density_.likelihood(h, next, s, a);
  }
  void observe(std::size_t h, State next, State s, Action a) override { density_.push(h, next, s, a); }
  std::size_t samples() const override { return density_.total_samples(); }
  const StepDensity& density() const { return density_; }

 private:
  StepDensity density_;
};

/// Fixed likelihood; with value 1 the shift-aware learners reduce to QUCB.
class ConstantLikelihood final : public TransitionLikelihood {
 public:
  explicit ConstantLikelihood(double value = 1.0) : value_(value) {}
  double likelihood(std::size_t, State, State, Action) const override { return value_; }
  void observe(std::size_t, State, State, Action) override {}
  std::size_t samples() const override { return 0; }

 private:
  double value_;
};

struct EpisodicParams {
  std::size_t num_states = 1;
  std::size_t num_actions = 1;
  std::size_t horizon = 1;
  std::uint64_t episodes = 1;  // K, enters iota
  double c = 0.5;
  double delta = 0.1;
  BonusForm bonus_form = BonusForm::theory;
};

struct DiscountedParams {
  std::size_t num_states = 1;
  std::size_t num_actions = 1;
  double gamma = 0.9;
  std::uint64_t steps = 1;  // T, enters iota(k)
  double c = 0.5;
  BonusForm bonus_form = BonusForm::theory;
};

class EpisodicAgent {
 public:
  virtual ~EpisodicAgent() = default;
  virtual Action act(std::size_t h, State s) const = 0;
  /// Learns from one transition; returns the likelihood that scaled the bonus
  /// (1 for likelihood-free learners).
  virtual double observe(std::size_t h, State s, Action a, double reward, State next) = 0;
  virtual void end_episode() {}
  /// Greedy action for every (h, s), laid out as h * S + s.
  virtual std::vector<Action> greedy_policy() const = 0;
  virtual SpaceUsage space() const = 0;
};

class DiscountedAgent {
 public:
  virtual ~DiscountedAgent() = default;
  virtual Action act(State s) const = 0;
  virtual double observe(State s, Action a, double reward, State next) = 0;
  virtual std::vector<Action> greedy_policy() const = 0;
  virtual SpaceUsage space() const = 0;
};

/// Q_h, V_h and N_h for the model-free episodic learners.
class EpisodicQTable {
 public:
  EpisodicQTable(std::size_t num_states, std::size_t num_actions, std::size_t horizon);

  Action greedy(std::size_t h, State s) const;
  /// Increments N_h(s,a) and returns the new count.
  std::size_t visit(std::size_t h, State s, Action a);
  /// Convex update with rate alpha_t towards r + V_{h+1}(s') + bonus, then
  /// V_h(s) <- min(H, max_a Q_h(s,a)).
  void update(std::size_t h, State s, Action a, std::size_t t, double reward, State next, double bonus);

  double q(std::size_t h, State s, Action a) const { return q_[(h * num_states_ + s) * num_actions_ + a]; }
  double v(std::size_t h, State s) const { return v_[h * num_states_ + s]; }
  std::size_t count(std::size_t h, State s, Action a) const { return n_[(h * num_states_ + s) * num_actions_ + a]; }
  void set_q(std::size_t h, State s, Action a, double value) { q_[(h * num_states_ + s) * num_actions_ + a] = value; }

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t horizon() const { return horizon_; }
  std::vector<Action> greedy_policy() const;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::size_t horizon_;
  std::vector<double> q_;
  std::vector<double> v_;  // (H+1) * S, last layer fixed at 0
  std::vector<std::size_t> n_;
};

/// Q-learning with Hoeffding UCB exploration.
class EpisodicQucb final : public EpisodicAgent {
 public:
  explicit EpisodicQucb(const EpisodicParams& params);

  Action act(std::size_t h, State s) const override { return table_.greedy(h, s); }
  double observe(std::size_t h, State s, Action a, double reward, State next) override;
  std::vector<Action> greedy_policy() const override { return table_.greedy_policy(); }
  SpaceUsage space() const override;
  const EpisodicQTable& table() const { return table_; }
  double iota() const { return iota_; }

 private:
  EpisodicParams params_;
  double iota_;
  EpisodicQTable table_;
};

/// Shift-aware Q-learning UCB: the bonus is divided by p(s'|s,a), evaluated
/// before the transition is added to the density model.
class EpisodicDqucb final : public EpisodicAgent {
 public:
  EpisodicDqucb(const EpisodicParams& params, std::unique_ptr<TransitionLikelihood> likelihood);

  Action act(std::size_t h, State s) const override { return table_.greedy(h, s); }
  double observe(std::size_t h, State s, Action a, double reward, State next) override;
  std::vector<Action> greedy_policy() const override { return table_.greedy_policy(); }
  SpaceUsage space() const override;
  const EpisodicQTable& table() const { return table_; }
  const TransitionLikelihood& likelihood() const { return *likelihood_; }
  double iota() const { return iota_; }

 private:
  EpisodicParams params_;
  double iota_;
  EpisodicQTable table_;
  std::unique_ptr<TransitionLikelihood> likelihood_;
};

/// Q, Q-hat, V-hat and N for the discounted learners.
class DiscountedQTable {
 public:
  DiscountedQTable(std::size_t num_states, std::size_t num_actions, double gamma);

  /// argmax_a Q(s,a), lowest index on ties.
  Action greedy(State s) const;
  std::size_t visit(State s, Action a);
  /// V-hat(s') <- max_a Q-hat(s',a); Q(s,a) <- (1-alpha_k)Q + alpha_k(r + gamma V-hat(s') + b);
  /// Q-hat(s,a) <- min(Q-hat(s,a), Q(s,a)).
  void update(State s, Action a, std::size_t k, double reward, State next, double bonus);

  double q(State s, Action a) const { return q_[s * num_actions_ + a]; }
  double q_hat(State s, Action a) const { return q_hat_[s * num_actions_ + a]; }
  double v_hat(State s) const { return v_hat_[s]; }
  std::size_t count(State s, Action a) const { return n_[s * num_actions_ + a]; }
  double gamma() const { return gamma_; }
  double horizon() const { return horizon_; }
  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::vector<Action> greedy_policy() const;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  double gamma_;
  double horizon_;
  std::vector<double> q_;
  std::vector<double> q_hat_;
  std::vector<double> v_hat_;
  std::vector<std::size_t> n_;
};

class DiscountedQucb final : public DiscountedAgent {
 public:
  explicit DiscountedQucb(const DiscountedParams& params);

  Action act(State s) const override { return table_.greedy(s); }
  double observe(State s, Action a, double reward, State next) override;
  std::vector<Action> greedy_policy() const override { return table_.greedy_policy(); }
  SpaceUsage space() const override;
  const DiscountedQTable& table() const { return table_; }

 private:
  DiscountedParams params_;
  DiscountedQTable table_;
};

class DiscountedDqucb final : public DiscountedAgent {
 public:
  DiscountedDqucb(const DiscountedParams& params, std::unique_ptr<TransitionLikelihood> likelihood);

  Action act(State s) const override { return table_.greedy(s); }
  double observe(State s, Action a, double reward, State next) override;
  std::vector<Action> greedy_policy() const override { return table_.greedy_policy(); }
  SpaceUsage space() const override;
  const DiscountedQTable& table() const { return table_; }
  const TransitionLikelihood& likelihood() const { return *likelihood_; }

 private:
  DiscountedParams params_;
  DiscountedQTable table_;
  std::unique_ptr<TransitionLikelihood> likelihood_;
};

/// Sufficient statistics of the empirical model used by UCBVI.
struct EmpiricalModel {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t horizon = 0;
  std::vector<std::uint64_t> transitions;  // [h][s][a][s'], |S|^2 |A| H cells
  std::vector<std::uint64_t> visits;       // [h][s][a]
  std::vector<double> rewards;             // last observed r_h(s,a)

  EmpiricalModel(std::size_t states, std::size_t actions, std::size_t steps);
  void record(std::size_t h, State s, Action a, double reward, State next);
  std::size_t index(std::size_t h, State s, Action a) const { return (h * num_states + s) * num_actions + a; }
};

/// Backward induction on the empirical model with Hoeffding bonus
/// H sqrt(2 log(|S||A| K H / delta) / max(1, N)); unvisited pairs get H and
/// Q and V are clamped to [0, H]. Returns Q laid out as [h][s][a].
std::vector<double> ucbvi_plan(const EmpiricalModel& model, std::uint64_t episodes, double delta);

class Ucbvi final : public EpisodicAgent {
 public:
  explicit Ucbvi(const EpisodicParams& params);

  Action act(std::size_t h, State s) const override;
  double observe(std::size_t h, State s, Action a, double reward, State next) override;
  /// Replans from all data gathered so far.
  void end_episode() override;
  std::vector<Action> greedy_policy() const override;
  SpaceUsage space() const override;
  double q(std::size_t h, State s, Action a) const { return q_[model_.index(h, s, a)]; }
  const EmpiricalModel& model() const { return model_; }

 private:
  EpisodicParams params_;
  EmpiricalModel model_;
  std::vector<double> q_;
};

}  // namespace dqucb
