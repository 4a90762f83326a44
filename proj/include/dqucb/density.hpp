#pragma once

// Sliding-window kernel density estimation over encoded (s', s, a) tuples.
//
// The joint estimator sees (s' coords, s coords, a) and the marginal
// estimator sees (s coords, a). Both use the same samples and the same
// isotropic Gaussian bandwidth, so the marginal is the exact marginalization
// of the joint and the ratio is a proper conditional density over s'.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "dqucb/envs.hpp"
#include "dqucb/mdp.hpp"

namespace dqucb {

struct DensityOptions {
  std::size_t capacity = 100;
  double bandwidth = 0.5;
  double min_likelihood = 1e-3;
  double max_likelihood = 1e3;
  bool operator==(const DensityOptions&) const = default;
};

/// (s' coords, s coords, a).
std::vector<double> encode_joint(const StateEncoding& enc, State s, Action a, State next);
/// (s coords, a).
std::vector<double> encode_marginal(const StateEncoding& enc, State s, Action a);

class DensityWindow {
 public:
  DensityWindow(std::shared_ptr<const StateEncoding> encoding, DensityOptions options);

  /// Appends the tuple, evicting the oldest once `capacity` is exceeded.
  void push(State next, State s, Action a);

  /// Clamped conditional likelihood p(s'|s,a). An empty window returns 1.
  double conditional_likelihood(State next, State s, Action a) const;

  /// Unclamped KDE_joint / KDE_marginal for an already-encoded joint vector.
  /// Requires a non-empty window.
  double conditional_density(std::span<const double> joint) const;

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t capacity() const { return options_.capacity; }
  std::size_t joint_dims() const { return joint_dims_; }
  std::size_t state_dims() const { return state_dims_; }
  const DensityOptions& options() const { return options_; }

  /// i-th oldest joint sample and its marginal projection.
  std::span<const double> joint_sample(std::size_t i) const;
  std::span<const double> marginal_sample(std::size_t i) const { return joint_sample(i).subspan(state_dims_); }

  /// Number of queries whose ratio came out non-finite.
  std::size_t non_finite_count() const { return non_finite_; }

 private:
  std::shared_ptr<const StateEncoding> encoding_;
  DensityOptions options_;
  std::size_t state_dims_;
  std::size_t joint_dims_;
  std::vector<double> samples_;  // ring buffer, capacity * joint_dims
  std::size_t head_ = 0;         // slot of the oldest sample
  std::size_t size_ = 0;
  mutable std::size_t non_finite_ = 0;
  mutable std::vector<double> scratch_;
};

/// One window per episode step, or a single window shared by all steps.
class StepDensity {
 public:
  StepDensity(std::shared_ptr<const StateEncoding> encoding, DensityOptions options, std::size_t horizon,
              bool pooled);

  double likelihood(std::size_t h, State next, State s, Action a) const { return window(h).conditional_likelihood(next, s, a); }
  void push(std::size_t h, State next, State s, Action a) { window(h).push(next, s, a); }

  const DensityWindow& window(std::size_t h) const { return windows_[windows_.size() == 1 ? 0 : h]; }
  DensityWindow& window(std::size_t h) { return windows_[windows_.size() == 1 ? 0 : h]; }
  std::size_t num_windows() const { return windows_.size(); }
  std::size_t total_samples() const;
  std::size_t non_finite_count() const;

 private:
  std::vector<DensityWindow> windows_;
};

enum class TraceNormalization { running_max, global_max };

/// Divides each value by the running or global maximum; all-zero input maps
/// to all zeros.
std::vector<double> normalized_likelihood_trace(std::span<const double> values, TraceNormalization mode);

}  // namespace dqucb
