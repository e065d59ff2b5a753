#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwpp/random.hpp"

namespace rwpp {

/// Lognormal law of transition lengths: log L ~ Normal(mu_l, sigma_l).
class LengthModel {
public:
  LengthModel(double mu_log, double sigma_log) : mu_(mu_log), sigma_(sigma_log) {
    if (!std::isfinite(mu_log)) throw std::invalid_argument("LengthModel: mu_l must be finite");
    if (!(sigma_log > 0.0) || !std::isfinite(sigma_log))
      throw std::invalid_argument("LengthModel: sigma_l must be positive and finite");
    if (!std::isfinite(mean_length())) throw std::invalid_argument("LengthModel: mean length overflows");
  }

  double mu_log() const noexcept { return mu_; }
  double sigma_log() const noexcept { return sigma_; }

  double mean_length() const noexcept { return std::exp(mu_ + 0.5 * sigma_ * sigma_); }
  double median_length() const noexcept { return std::exp(mu_); }

  double pdf(double l) const noexcept {
    if (!(l > 0.0)) return 0.0;
    const double z = (std::log(l) - mu_) / sigma_;
    return std::exp(-0.5 * z * z) / (l * sigma_ * std::sqrt(2.0 * std::numbers::pi));
  }

  double cdf(double l) const noexcept {
    if (!(l > 0.0)) return 0.0;
    return 0.5 * std::erfc(-(std::log(l) - mu_) / (sigma_ * std::numbers::sqrt2));
  }

  /// One lognormal draw, strictly positive.
  double sample(Rng& rng) const { return std::exp(mu_ + sigma_ * standard_normal(rng)); }

  friend bool operator==(const LengthModel&, const LengthModel&) = default;

private:
  double mu_;
  double sigma_;
};

/// One weighted normal component of the velocity mixture.
struct VelocityComponent {
  double weight = 1.0; ///< unnormalized, >= 0
  double mean = 0.0;   ///< m/s
  double stddev = 0.25; ///< m/s

  friend bool operator==(const VelocityComponent&, const VelocityComponent&) = default;
};

/// Convex combination of D normal laws for the per-transition velocity.
class VelocityMixture {
public:
  explicit VelocityMixture(std::vector<VelocityComponent> components) : components_(std::move(components)) {
    if (components_.empty()) throw std::invalid_argument("VelocityMixture: at least one component required");
    double total = 0.0;
    for (const auto& c : components_) {
      if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
        throw std::invalid_argument("VelocityMixture: weights must be nonnegative");
      if (!(c.stddev > 0.0)) throw std::invalid_argument("VelocityMixture: sigma_d must be positive");
      if (!(c.mean > 0.0)) throw std::invalid_argument("VelocityMixture: mu_d must be positive");
      total += c.weight;
    }
    if (!(total > 0.0)) throw std::invalid_argument("VelocityMixture: weights must have a positive sum");
    total_weight_ = total;
    cumulative_.reserve(components_.size());
    double acc = 0.0;
    for (const auto& c : components_) {
      acc += c.weight;
      cumulative_.push_back(acc);
    }
  }

  const std::vector<VelocityComponent>& components() const noexcept { return components_; }
  std::size_t size() const noexcept { return components_.size(); }
  double total_weight() const noexcept { return total_weight_; }
  double normalized_weight(std::size_t d) const { return components_.at(d).weight / total_weight_; }

  /// Mixture mean, sum(w_d mu_d) / sum(w_d).
  double mean() const noexcept {
    double s = 0.0;
    for (const auto& c : components_) s += c.weight * c.mean;
    return s / total_weight_;
  }

  double min_mean() const noexcept {
    double m = components_.front().mean;
    for (const auto& c : components_) m = std::min(m, c.mean);
    return m;
  }

  double max_mean() const noexcept {
    double m = components_.front().mean;
    for (const auto& c : components_) m = std::max(m, c.mean);
    return m;
  }

  double pdf(double v) const noexcept {
    double s = 0.0;
    for (const auto& c : components_) {
      const double z = (v - c.mean) / c.stddev;
      s += c.weight * std::exp(-0.5 * z * z) / (c.stddev * std::sqrt(2.0 * std::numbers::pi));
    }
    return s / total_weight_;
  }

  double cdf(double v) const noexcept {
    double s = 0.0;
    for (const auto& c : components_)
      s += c.weight * 0.5 * std::erfc(-(v - c.mean) / (c.stddev * std::numbers::sqrt2));
    return s / total_weight_;
  }

  /// Picks component d with probability w_d / sum(w).
  std::size_t pick_component(Rng& rng) const noexcept {
    const double u = uniform_closed_open(rng) * total_weight_;
    for (std::size_t d = 0; d < cumulative_.size(); ++d)
      if (u < cumulative_[d] && components_[d].weight > 0.0) return d;
    // u landed on the rounding edge; take the last component with mass.
    for (std::size_t d = components_.size(); d-- > 0;)
      if (components_[d].weight > 0.0) return d;
    return 0;
  }

  friend bool operator==(const VelocityMixture& a, const VelocityMixture& b) { return a.components_ == b.components_; }

private:
  std::vector<VelocityComponent> components_;
  std::vector<double> cumulative_;
  double total_weight_ = 0.0;
};

/// Thrown when rejection sampling cannot produce a velocity above the floor.
class SamplingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kVelocityRetryCap = 10'000;

/// Draws from the mixture, redrawing while the value is <= floor.
inline double sample_velocity(const VelocityMixture& mix, Rng& rng, double floor = 0.0) {
  if (!(floor >= 0.0)) throw std::invalid_argument("sample_velocity: floor must be >= 0");
  for (int attempt = 0; attempt < kVelocityRetryCap; ++attempt) {
    const auto& c = mix.components()[mix.pick_component(rng)];
    const double v = c.mean + c.stddev * standard_normal(rng);
    if (v > floor) return v;
  }
  throw SamplingError("sample_velocity: no draw above floor after " + std::to_string(kVelocityRetryCap) +
                      " attempts; mixture mass is concentrated below the floor");
}

inline double sample_length(const LengthModel& model, Rng& rng) { return model.sample(rng); }

inline double mixture_mean(const VelocityMixture& mix) noexcept { return mix.mean(); }

/// Bearing law, measured clockwise from north.
struct BearingModel {
  enum class Kind { UniformCircle, Normal };
  Kind kind = Kind::UniformCircle;
  double mean = 0.0;   ///< radians (Normal only)
  double stddev = 0.0; ///< radians (Normal only)

  static BearingModel uniform() { return {}; }
  static BearingModel normal(double mean, double stddev) {
    if (!(stddev >= 0.0) || !std::isfinite(mean))
      throw std::invalid_argument("BearingModel: normal bearing needs finite mean and stddev >= 0");
    return {Kind::Normal, mean, stddev};
  }

  friend bool operator==(const BearingModel&, const BearingModel&) = default;
};

/// Maps any angle into (0, 2pi].
inline double wrap_bearing(double theta) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta, two_pi);
  if (r <= 0.0) r += two_pi;
  return r;
}

inline double sample_bearing(const BearingModel& model, Rng& rng) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (model.kind == BearingModel::Kind::UniformCircle) return two_pi * uniform_open_closed(rng);
  return wrap_bearing(model.mean + model.stddev * standard_normal(rng));
}

} // namespace rwpp
