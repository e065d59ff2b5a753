#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "rwpp/models.hpp"
#include "rwpp/quadrature.hpp"
#include "rwpp/random.hpp"

namespace rwpp {

/// Law of the transition duration T = L / V with L lognormal and V a normal
/// mixture, independent. The velocity integral is discretized once per
/// component with Gauss-Legendre nodes over [max(eps, mu_d - k sigma_d),
/// mu_d + k sigma_d]; every query is then a weighted sum over those nodes.
class DurationLaw {
public:
  DurationLaw(const LengthModel& length, const VelocityMixture& mix, const QuadratureSpec& quad = {})
      : length_(length) {
    quad.validate();
    const GaussLegendre rule(quad.nodes);
    nodes_.reserve(mix.size() * quad.nodes);
    for (const auto& c : mix.components()) {
      if (c.weight == 0.0) continue;
      const double wd = c.weight / mix.total_weight();
      const double lo = std::max(quad.velocity_floor, c.mean - quad.half_width * c.stddev);
      const double hi = c.mean + quad.half_width * c.stddev;
      if (!(hi > lo)) continue;
      const double mid = 0.5 * (lo + hi);
      const double half = 0.5 * (hi - lo);
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double v = mid + half * rule.nodes[i];
        const double z = (v - c.mean) / c.stddev;
        const double g = std::exp(-0.5 * z * z) / (c.stddev * std::sqrt(2.0 * std::numbers::pi));
        const double w = wd * half * rule.weights[i] * g;
        nodes_.push_back({v, std::log(v), w});
      }
    }
    if (nodes_.empty()) throw std::invalid_argument("DurationLaw: mixture has no mass above the velocity floor");
  }

  const LengthModel& length() const noexcept { return length_; }

  /// Density h_T(t). Throws std::domain_error for t <= 0.
  double pdf(double t) const {
    if (!(t > 0.0)) throw std::domain_error("duration pdf: t must be positive");
    const double log_t = std::log(t);
    const double sl = length_.sigma_log();
    double s = 0.0;
    for (const auto& n : nodes_) {
      const double z = (n.log_v + log_t - length_.mu_log()) / sl;
      s += n.weight * std::exp(-0.5 * z * z);
    }
    return s / (t * sl * std::sqrt(2.0 * std::numbers::pi));
  }

  /// P(T <= t) = E_V[ P(L <= V t) ].
  double cdf(double t) const {
    if (!(t > 0.0)) return 0.0;
    const double log_t = std::log(t);
    const double sl = length_.sigma_log();
    double s = 0.0;
    for (const auto& n : nodes_) {
      const double z = (n.log_v + log_t - length_.mu_log()) / sl;
      s += n.weight * 0.5 * std::erfc(-z / std::numbers::sqrt2);
    }
    return s;
  }

  /// E[T] = E[L] * E[1/V].
  double mean() const noexcept {
    double s = 0.0;
    for (const auto& n : nodes_) s += n.weight / n.v;
    return length_.mean_length() * s;
  }

  /// Total velocity mass captured by the nodes; 1 up to truncation error.
  double captured_mass() const noexcept {
    double s = 0.0;
    for (const auto& n : nodes_) s += n.weight;
    return s;
  }

  /// Inverse CDF by bracketed Newton iteration; every Newton step that would
  /// leave the bracket is replaced by bisection. Stops when the bracket or
  /// step is below `tol` seconds.
  double quantile(double u, double tol = 1e-10) const {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("duration quantile: u must lie in (0, 1)");
    const double mass = captured_mass();
    const double target = u * mass;
    double lo = 0.0;
    double hi = std::max(1e-3, length_.median_length() / 30.0);
    while (cdf(hi) < target) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw std::runtime_error("duration quantile: failed to bracket");
    }
    double t = 0.5 * (lo + hi);
    for (int iter = 0; iter < 400; ++iter) {
      const double f = cdf(t) - target;
      if (f == 0.0) return t;
      if (f < 0.0) lo = t; else hi = t;
      if (hi - lo <= tol) return 0.5 * (lo + hi);
      const double d = pdf(t);
      double next = (d > 0.0) ? t - f / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - t) <= tol) return next;
      t = next;
    }
    return 0.5 * (lo + hi);
  }

  double sample(Rng& rng) const {
    double u = uniform_open_closed(rng);
    if (u >= 1.0) u = std::nextafter(1.0, 0.0);
    return quantile(u);
  }

private:
  struct Node {
    double v;
    double log_v;
    double weight;
  };

  LengthModel length_;
  std::vector<Node> nodes_;
};

} // namespace rwpp
