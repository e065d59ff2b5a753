#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rwpp/duration.hpp"
#include "rwpp/models.hpp"
#include "rwpp/presets.hpp"
#include "rwpp/quadrature.hpp"
#include "rwpp/random.hpp"

namespace rwpp {

/// Inputs of the closed-form handoff rate.
struct TheoryInputs {
  LengthModel length;
  VelocityMixture mix;
  double lambda = 0.0; ///< base stations per m^2
  double pause = 0.0;  ///< deterministic pause per waypoint, s
  BearingModel bearing = BearingModel::uniform();

  void validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("TheoryInputs: lambda must be positive");
    if (!(pause >= 0.0)) throw std::invalid_argument("TheoryInputs: pause must be >= 0");
  }
};

inline double duration_pdf(double t, const LengthModel& length, const VelocityMixture& mix,
                           const QuadratureSpec& quad = {}) {
  if (!(t > 0.0)) throw std::domain_error("duration_pdf: t must be positive");
  return DurationLaw(length, mix, quad).pdf(t);
}

/// Mean transition duration E[T] = E[L] E[1/V].
inline double expected_duration(const LengthModel& length, const VelocityMixture& mix, const QuadratureSpec& quad = {}) {
  return DurationLaw(length, mix, quad).mean();
}

/// Integral of h_T over (0, inf), done in log-time with adaptive Gauss-Kronrod.
inline double duration_pdf_mass(const DurationLaw& law, const VelocityMixture& mix) {
  const double sl = law.length().sigma_log();
  const double centre = law.length().mu_log();
  const double lo = centre - std::log(mix.max_mean() + 12.0) - 14.0 * sl;
  const double hi = centre - std::log(std::max(1e-3, 0.5 * mix.min_mean())) + 14.0 * sl;
  auto f = [&](double u) {
    const double t = std::exp(u);
    return law.pdf(t) * t;
  };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13, &err);
}

/// E|sin(theta)| where theta is the angle between the path and the crossed
/// boundary. Over an isotropic tessellation this law is uniform regardless of
/// the movement bearing; other laws model anisotropic layouts.
inline double mean_abs_sin(const BearingModel& bearing) {
  using std::numbers::pi;
  if (bearing.kind == BearingModel::Kind::UniformCircle) return 2.0 / pi;
  const double mu = bearing.mean;
  const double sd = bearing.stddev;
  if (sd == 0.0) return std::abs(std::sin(mu));
  static const GaussLegendre rule(256);
  const auto gauss = [&](double x) {
    const double z = (x - mu) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * pi));
  };
  double total = 0.0;
  if (sd <= 2.0) {
    // Real line, split where |sin| has kinks.
    const double lo = mu - 12.0 * sd;
    const double hi = mu + 12.0 * sd;
    double a = lo;
    double k = std::floor(lo / pi) + 1.0;
    while (a < hi) {
      const double b = std::min(hi, k * pi);
      total += rule.integrate([&](double x) { return std::abs(std::sin(x)) * gauss(x); }, a, b);
      a = b;
      k += 1.0;
    }
    return total;
  }
  // One period against the wrapped normal density.
  const int j0 = static_cast<int>(std::floor((mu - 12.0 * sd) / (2.0 * pi))) - 1;
  const int j1 = static_cast<int>(std::ceil((mu + 12.0 * sd) / (2.0 * pi))) + 1;
  const auto integrand = [&](double x) {
    double s = 0.0;
    for (int j = j0; j <= j1; ++j) s += gauss(x + 2.0 * pi * j);
    return std::abs(std::sin(x)) * s;
  };
  total += rule.integrate(integrand, 0.0, pi);
  total += rule.integrate(integrand, pi, 2.0 * pi);
  return total;
}

/// E[N] per transition: 2 E[V] E|sin(theta)| sqrt(lambda) E[T].
inline double expected_handoffs(const TheoryInputs& in, double mean_duration) {
  if (!(mean_duration > 0.0)) throw std::invalid_argument("expected_handoffs: mean duration must be positive");
  if (!(in.lambda >= 0.0)) throw std::invalid_argument("expected_handoffs: lambda must be >= 0");
  return 2.0 * in.mix.mean() * mean_abs_sin(in.bearing) * std::sqrt(in.lambda) * mean_duration;
}

/// Handoffs per second, E[N] / (E[T] + S). With a uniform bearing this is
/// 4 sqrt(lambda) E[V] E[T] / (pi (E[T] + S)).
inline double handoff_rate(const TheoryInputs& in, const QuadratureSpec& quad = {}) {
  in.validate();
  const double mean_t = expected_duration(in.length, in.mix, quad);
  // Grouped so that mean_t / (mean_t + 0) is exactly 1.
  const double per_time = 2.0 * in.mix.mean() * mean_abs_sin(in.bearing) * std::sqrt(in.lambda);
  return per_time * (mean_t / (mean_t + in.pause));
}

/// Waypoint density of the nearest-neighbour (Rayleigh) length law whose mean
/// 1/(2 sqrt(lambda_wp)) equals the lognormal mean.
inline double literature_waypoint_density(const LengthModel& length) {
  const double mean = length.mean_length();
  return 1.0 / (4.0 * mean * mean);
}

/// Inverse-CDF draw from F(l) = 1 - exp(-lambda_wp pi l^2).
inline double literature_length_sampler(double lambda_wp, Rng& rng) {
  if (!(lambda_wp > 0.0)) throw std::invalid_argument("literature_length_sampler: lambda_wp must be positive");
  const double u = uniform_closed_open(rng);
  const double l = std::sqrt(-std::log1p(-u) / (lambda_wp * std::numbers::pi));
  // u == 0 gives l == 0; the support is l > 0.
  return l > 0.0 ? l : std::sqrt(0x1.0p-53 / (lambda_wp * std::numbers::pi));
}

inline double literature_length_cdf(double l, double lambda_wp) {
  return l > 0.0 ? -std::expm1(-lambda_wp * std::numbers::pi * l * l) : 0.0;
}

/// Writes `preset,lambda_per_km2,handoff_rate_per_s` rows, one per
/// (preset, lambda) pair in the given order.
inline void write_theory_csv(std::ostream& out, std::span<const CityPreset> presets, std::span<const double> lambda_per_km2,
                             double pause, const BearingModel& bearing, const QuadratureSpec& quad = {}) {
  if (lambda_per_km2.empty()) throw std::invalid_argument("theory: lambda grid is empty");
  out << "preset,lambda_per_km2,handoff_rate_per_s\n";
  char buf[128];
  for (const auto& p : presets)
    for (const double lk : lambda_per_km2) {
      const double h = handoff_rate({p.length, p.velocity, lk * 1e-6, pause, bearing}, quad);
      std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g\n", p.name.c_str(), lk, h);
      out << buf;
    }
}

} // namespace rwpp
