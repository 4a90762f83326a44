#include "dqucb/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dqucb {

std::vector<double> encode_joint(const StateEncoding& enc, State s, Action a, State next) {
  std::vector<double> out(enc.of(next), enc.of(next) + enc.dims);
  out.insert(out.end(), enc.of(s), enc.of(s) + enc.dims);
  out.push_back(static_cast<double>(a));
  return out;
}

std::vector<double> encode_marginal(const StateEncoding& enc, State s, Action a) {
  std::vector<double> out(enc.of(s), enc.of(s) + enc.dims);
  out.push_back(static_cast<double>(a));
  return out;
}

DensityWindow::DensityWindow(std::shared_ptr<const StateEncoding> encoding, DensityOptions options)
    : encoding_(std::move(encoding)), options_(options) {
  if (!encoding_) throw std::invalid_argument("density window needs a state encoding");
  if (options_.capacity == 0) throw std::invalid_argument("density window capacity must be positive");
  if (!(options_.bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (!(options_.min_likelihood > 0.0) || !(options_.max_likelihood >= options_.min_likelihood))
    throw std::invalid_argument("likelihood clamps must satisfy 0 < min <= max");
  state_dims_ = encoding_->dims;
  joint_dims_ = 2 * state_dims_ + 1;
  samples_.assign(options_.capacity * joint_dims_, 0.0);
  scratch_.resize(options_.capacity);
}

void DensityWindow::push(State next, State s, Action a) {
  const StateEncoding& enc = *encoding_;
  std::size_t slot;
  if (size_ < options_.capacity) {
    slot = (head_ + size_) % options_.capacity;
    ++size_;
  } else {
    slot = head_;
    head_ = (head_ + 1) % options_.capacity;
  }
  double* out = samples_.data() + slot * joint_dims_;
  std::copy(enc.of(next), enc.of(next) + state_dims_, out);
  std::copy(enc.of(s), enc.of(s) + state_dims_, out + state_dims_);
  out[joint_dims_ - 1] = static_cast<double>(a);
}

std::span<const double> DensityWindow::joint_sample(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("density window sample index out of range");
  const std::size_t slot = (head_ + i) % options_.capacity;
  return {samples_.data() + slot * joint_dims_, joint_dims_};
}

double DensityWindow::conditional_density(std::span<const double> joint) const {
  if (size_ == 0) throw std::logic_error("conditional density of an empty window");
  if (joint.size() != joint_dims_) throw std::invalid_argument("joint vector has the wrong dimension");
  const double scale = -0.5 / (options_.bandwidth * options_.bandwidth);

  // Log-kernel of the marginal part, shifted by its maximum so the marginal
  // sum is at least 1 and never underflows.
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size_; ++i) {
    const double* x = samples_.data() + i * joint_dims_;
    double d2 = 0.0;
    for (std::size_t k = state_dims_; k < joint_dims_; ++k) {
      const double diff = joint[k] - x[k];
      d2 += diff * diff;
    }
    scratch_[i] = scale * d2;
    shift = std::max(shift, scratch_[i]);
  }
  double marginal = 0.0;
  double joint_sum = 0.0;
  for (std::size_t i = 0; i < size_; ++i) {
    const double* x = samples_.data() + i * joint_dims_;
    double d2 = 0.0;
    for (std::size_t k = 0; k < state_dims_; ++k) {
      const double diff = joint[k] - x[k];
      d2 += diff * diff;
    }
    const double w = std::exp(scratch_[i] - shift);
    marginal += w;
    joint_sum += w * std::exp(scale * d2);
  }
  const double norm = std::pow(2.0 * std::numbers::pi * options_.bandwidth * options_.bandwidth,
                               -0.5 * static_cast<double>(state_dims_));
  return norm * joint_sum / marginal;
}

double DensityWindow::conditional_likelihood(State next, State s, Action a) const {
  if (size_ == 0) return 1.0;
  const auto joint = encode_joint(*encoding_, s, a, next);
  const double ratio = conditional_density(joint);
  if (!std::isfinite(ratio)) {
    ++non_finite_;
    return options_.min_likelihood;
  }
  return std::clamp(ratio, options_.min_likelihood, options_.max_likelihood);
}

StepDensity::StepDensity(std::shared_ptr<const StateEncoding> encoding, DensityOptions options, std::size_t horizon,
                         bool pooled) {
  const std::size_t count = pooled ? 1 : std::max<std::size_t>(horizon, 1);
  windows_.reserve(count);
  for (std::size_t i = 0; i < count; ++i) windows_.emplace_back(encoding, options);
}

std::size_t StepDensity::total_samples() const {
  std::size_t total = 0;
  for (const auto& w : windows_) total += w.size();
  return total;
}

std::size_t StepDensity::non_finite_count() const {
  std::size_t total = 0;
  for (const auto& w : windows_) total += w.non_finite_count();
  return total;
}

std::vector<double> normalized_likelihood_trace(std::span<const double> values, TraceNormalization mode) {
  if (values.empty()) throw std::invalid_argument("likelihood trace must be non-empty");
  std::vector<double> out(values.size(), 0.0);
  if (mode == TraceNormalization::global_max) {
    const double peak = *std::max_element(values.begin(), values.end());
    if (peak <= 0.0) return out;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] / peak;
    return out;
  }
  double peak = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    peak = std::max(peak, values[i]);
    out[i] = peak > 0.0 ? values[i] / peak : 0.0;
  }
  return out;
}

}  // namespace dqucb
