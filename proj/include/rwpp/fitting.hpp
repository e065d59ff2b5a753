#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/distributions/inverse_gaussian.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "rwpp/optimize.hpp"
#include "rwpp/random.hpp"

namespace rwpp {

/// Candidate families for positive data. Parameter order per family:
///   Exponential      {mu: mean}
///   Gamma            {a: shape, b: scale}
///   Lognormal        {mu_log, sigma_log}
///   LogLogistic      {mu_log, b_log}       log X ~ Logistic(mu_log, b_log)
///   InverseGaussian  {b: mean, a: shape}
///   Rayleigh         {b: scale}
///   Nakagami         {a: shape m, b: spread Omega = E[X^2]}
///   Weibull          {b: scale, a: shape}
///   BirnbaumSaunders {b: scale beta, a: shape alpha}
enum class Family {
  Exponential,
  Gamma,
  Lognormal,
  LogLogistic,
  InverseGaussian,
  Rayleigh,
  Nakagami,
  Weibull,
  BirnbaumSaunders,
};

inline constexpr std::array<Family, 9> kAllFamilies = {
    Family::Exponential, Family::Gamma,    Family::Lognormal, Family::LogLogistic,     Family::InverseGaussian,
    Family::Rayleigh,    Family::Nakagami, Family::Weibull,   Family::BirnbaumSaunders,
};

inline std::string_view family_name(Family f) {
  switch (f) {
  case Family::Exponential: return "exponential";
  case Family::Gamma: return "gamma";
  case Family::Lognormal: return "lognormal";
  case Family::LogLogistic: return "loglogistic";
  case Family::InverseGaussian: return "inverse_gaussian";
  case Family::Rayleigh: return "rayleigh";
  case Family::Nakagami: return "nakagami";
  case Family::Weibull: return "weibull";
  case Family::BirnbaumSaunders: return "birnbaum_saunders";
  }
  return "unknown";
}

inline std::vector<std::string_view> parameter_names(Family f) {
  switch (f) {
  case Family::Exponential: return {"mu"};
  case Family::Gamma: return {"a", "b"};
  case Family::Lognormal: return {"mu_log", "sigma_log"};
  case Family::LogLogistic: return {"mu_log", "b_log"};
  case Family::InverseGaussian: return {"b", "a"};
  case Family::Rayleigh: return {"b"};
  case Family::Nakagami: return {"a", "b"};
  case Family::Weibull: return {"b", "a"};
  case Family::BirnbaumSaunders: return {"b", "a"};
  }
  return {};
}

inline std::size_t parameter_count(Family f) { return parameter_names(f).size(); }

/// True for parameters that are location-like (may be any real).
inline bool parameter_unbounded(Family f, std::size_t i) {
  return (f == Family::Lognormal || f == Family::LogLogistic) && i == 0;
}

inline Family family_from_name(std::string_view name) {
  for (const Family f : kAllFamilies)
    if (family_name(f) == name) return f;
  throw std::invalid_argument("unknown distribution family '" + std::string(name) + "'");
}

/// A family with concrete parameters.
class Distribution {
public:
  Distribution(Family family, std::vector<double> params) : family_(family), p_(std::move(params)) {
    if (p_.size() != parameter_count(family_))
      throw std::invalid_argument("Distribution: wrong parameter count for " + std::string(family_name(family_)));
    for (std::size_t i = 0; i < p_.size(); ++i) {
      if (!std::isfinite(p_[i])) throw std::invalid_argument("Distribution: parameters must be finite");
      if (!parameter_unbounded(family_, i) && !(p_[i] > 0.0))
        throw std::invalid_argument("Distribution: " + std::string(family_name(family_)) + " parameter " +
                                    std::string(parameter_names(family_)[i]) + " must be positive");
    }
  }

  Family family() const noexcept { return family_; }
  const std::vector<double>& params() const noexcept { return p_; }

  double log_pdf(double x) const { return log_pdf(x, std::log(x)); }

  /// log density with log(x) supplied by the caller.
  double log_pdf(double x, double lx) const {
    using std::numbers::pi;
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    switch (family_) {
    case Family::Exponential: return -std::log(p_[0]) - x / p_[0];
    case Family::Gamma: {
      const double a = p_[0], b = p_[1];
      return (a - 1.0) * lx - x / b - std::lgamma(a) - a * std::log(b);
    }
    case Family::Lognormal: {
      const double z = (lx - p_[0]) / p_[1];
      return -lx - std::log(p_[1]) - 0.5 * std::log(2.0 * pi) - 0.5 * z * z;
    }
    case Family::LogLogistic: {
      const double z = (lx - p_[0]) / p_[1];
      return z - std::log(p_[1]) - lx - 2.0 * softplus(z);
    }
    case Family::InverseGaussian: {
      const double m = p_[0], a = p_[1];
      const double d = x - m;
      return 0.5 * (std::log(a) - std::log(2.0 * pi) - 3.0 * lx) - a * d * d / (2.0 * m * m * x);
    }
    case Family::Rayleigh: {
      const double b = p_[0];
      return lx - 2.0 * std::log(b) - x * x / (2.0 * b * b);
    }
    case Family::Nakagami: {
      const double m = p_[0], om = p_[1];
      return std::log(2.0) + m * std::log(m) - std::lgamma(m) - m * std::log(om) + (2.0 * m - 1.0) * lx - m * x * x / om;
    }
    case Family::Weibull: {
      const double b = p_[0], a = p_[1];
      const double lr = lx - std::log(b);
      return std::log(a) - std::log(b) + (a - 1.0) * lr - std::exp(a * lr);
    }
    case Family::BirnbaumSaunders: {
      const double beta = p_[0], alpha = p_[1];
      const double r = std::sqrt(x / beta);
      const double xi = (r - 1.0 / r) / alpha;
      return std::log(r + 1.0 / r) - std::log(2.0 * alpha * x) - 0.5 * std::log(2.0 * pi) - 0.5 * xi * xi;
    }
    }
    return -std::numeric_limits<double>::infinity();
  }

  double pdf(double x) const { return x > 0.0 ? std::exp(log_pdf(x)) : 0.0; }

  double cdf(double x) const {
    if (!(x > 0.0)) return 0.0;
    switch (family_) {
    case Family::Exponential: return -std::expm1(-x / p_[0]);
    case Family::Gamma: return boost::math::gamma_p(p_[0], x / p_[1]);
    case Family::Lognormal: return phi((std::log(x) - p_[0]) / p_[1]);
    case Family::LogLogistic: return 1.0 / (1.0 + std::exp(-(std::log(x) - p_[0]) / p_[1]));
    case Family::InverseGaussian:
      return boost::math::cdf(boost::math::inverse_gaussian_distribution<double>(p_[0], p_[1]), x);
    case Family::Rayleigh: return -std::expm1(-x * x / (2.0 * p_[0] * p_[0]));
    case Family::Nakagami: return boost::math::gamma_p(p_[0], p_[0] * x * x / p_[1]);
    case Family::Weibull: return -std::expm1(-std::pow(x / p_[0], p_[1]));
    case Family::BirnbaumSaunders: {
      const double r = std::sqrt(x / p_[0]);
      return phi((r - 1.0 / r) / p_[1]);
    }
    }
    return 0.0;
  }

  double sample(Rng& rng) const {
    switch (family_) {
    case Family::Exponential: return -p_[0] * std::log(uniform_open_closed(rng));
    case Family::Gamma: return p_[1] * sample_gamma(p_[0], rng);
    case Family::Lognormal: return std::exp(p_[0] + p_[1] * standard_normal(rng));
    case Family::LogLogistic: {
      const double u = uniform_open_closed(rng);
      if (u >= 1.0) return sample(rng);
      return std::exp(p_[0] + p_[1] * std::log(u / (1.0 - u)));
    }
    case Family::InverseGaussian: {
      // Michael, Schucany and Haas transformation.
      const double m = p_[0], a = p_[1];
      const double z = standard_normal(rng);
      const double y = z * z;
      const double x = m + m * m * y / (2.0 * a) - m / (2.0 * a) * std::sqrt(4.0 * m * a * y + m * m * y * y);
      return (uniform_closed_open(rng) <= m / (m + x)) ? x : m * m / x;
    }
    case Family::Rayleigh: return p_[0] * std::sqrt(-2.0 * std::log(uniform_open_closed(rng)));
    case Family::Nakagami: return std::sqrt(sample_gamma(p_[0], rng) * p_[1] / p_[0]);
    case Family::Weibull: return p_[0] * std::pow(-std::log(uniform_open_closed(rng)), 1.0 / p_[1]);
    case Family::BirnbaumSaunders: {
      const double h = 0.5 * p_[1] * standard_normal(rng);
      const double r = h + std::sqrt(h * h + 1.0);
      return p_[0] * r * r;
    }
    }
    return 0.0;
  }

private:
  static double phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
  static double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

  /// Marsaglia-Tsang; shapes below one use the U^(1/a) boost.
  static double sample_gamma(double shape, Rng& rng) {
    if (shape < 1.0) return sample_gamma(shape + 1.0, rng) * std::pow(uniform_open_closed(rng), 1.0 / shape);
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = standard_normal(rng);
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open_closed(rng);
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  Family family_;
  std::vector<double> p_;
};

/// Fit failure naming the family.
class FitError : public std::runtime_error {
public:
  FitError(Family f, const std::string& what)
      : std::runtime_error(std::string(family_name(f)) + " fit: " + what), family_(f) {}
  Family family() const noexcept { return family_; }

private:
  Family family_;
};

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct FitResult {
  Family family = Family::Exponential;
  std::vector<double> params;
  std::vector<ConfidenceInterval> ci95;
  double loglik = 0.0;
  double rmse = 0.0;
  std::optional<std::size_t> rank;

  Distribution distribution() const { return Distribution(family, params); }
};

/// Samples with their logs precomputed; validates positivity.
class SampleSet {
public:
  explicit SampleSet(std::span<const double> xs, std::size_t min_size = 1) : x_(xs.begin(), xs.end()) {
    if (x_.size() < min_size)
      throw std::invalid_argument("need at least " + std::to_string(min_size) + " samples, got " +
                                  std::to_string(x_.size()));
    lx_.reserve(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) {
      if (!(x_[i] > 0.0) || !std::isfinite(x_[i]))
        throw std::invalid_argument("sample " + std::to_string(i) + " is not a positive finite number");
      lx_.push_back(std::log(x_[i]));
    }
  }

  std::size_t size() const noexcept { return x_.size(); }
  const std::vector<double>& values() const noexcept { return x_; }
  const std::vector<double>& logs() const noexcept { return lx_; }

  double mean() const { return sum(x_) / n(); }
  double mean_log() const { return sum(lx_) / n(); }
  double var() const {
    const double m = mean();
    long double s = 0;
    for (double v : x_) s += (v - m) * (v - m);
    return static_cast<double>(s) / n();
  }
  double var_log() const {
    const double m = mean_log();
    long double s = 0;
    for (double v : lx_) s += (v - m) * (v - m);
    return static_cast<double>(s) / n();
  }
  double mean_sq() const {
    long double s = 0;
    for (double v : x_) s += static_cast<long double>(v) * v;
    return static_cast<double>(s / x_.size());
  }
  double mean_inv() const {
    long double s = 0;
    for (double v : x_) s += 1.0L / v;
    return static_cast<double>(s / x_.size());
  }

private:
  double n() const { return static_cast<double>(x_.size()); }
  static double sum(const std::vector<double>& v) {
    long double s = 0;
    for (double a : v) s += a;
    return static_cast<double>(s);
  }

  std::vector<double> x_;
  std::vector<double> lx_;
};

/// Sum of log densities; -inf when the parameters are invalid.
inline double log_likelihood(Family f, std::span<const double> params, const SampleSet& s) {
  std::optional<Distribution> d;
  try {
    d.emplace(f, std::vector<double>(params.begin(), params.end()));
  } catch (const std::invalid_argument&) {
    return -std::numeric_limits<double>::infinity();
  }
  long double acc = 0.0L;
  const auto& x = s.values();
  const auto& lx = s.logs();
  for (std::size_t i = 0; i < x.size(); ++i) acc += d->log_pdf(x[i], lx[i]);
  const double r = static_cast<double>(acc);
  return std::isnan(r) ? -std::numeric_limits<double>::infinity() : r;
}

inline constexpr std::size_t kMinFitSamples = 10;

namespace detail {

/// Moment-type starting point for the optimizer.
inline std::vector<double> initial_guess(Family f, const SampleSet& s) {
  using std::numbers::pi;
  const double m = s.mean();
  const double v = std::max(s.var(), 1e-12 * m * m);
  const double ml = s.mean_log();
  const double sl = std::sqrt(std::max(s.var_log(), 1e-12));
  switch (f) {
  case Family::Exponential: {
    std::vector<double> sorted = s.values();
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    return {sorted[sorted.size() / 2] / std::log(2.0)};
  }
  case Family::Gamma: return {m * m / v, v / m};
  case Family::Lognormal: return {std::log(m) - 0.5 * std::log1p(v / (m * m)), std::sqrt(std::log1p(v / (m * m)))};
  case Family::LogLogistic: return {ml, sl * std::sqrt(3.0) / pi};
  case Family::InverseGaussian: return {m, m * m * m / v};
  case Family::Rayleigh: return {m / std::sqrt(0.5 * pi)};
  case Family::Nakagami: {
    const double om = s.mean_sq();
    long double q = 0;
    for (double x : s.values()) q += (static_cast<long double>(x) * x - om) * (static_cast<long double>(x) * x - om);
    const double var2 = static_cast<double>(q / s.size());
    return {std::max(0.05, om * om / var2), om};
  }
  case Family::Weibull: {
    const double a = pi / (sl * std::sqrt(6.0));
    return {std::exp(ml + 0.5772156649015329 / a), a};
  }
  case Family::BirnbaumSaunders: {
    const double r = 1.0 / s.mean_inv();
    const double beta = std::sqrt(m * r);
    const double alpha = std::sqrt(std::max(1e-6, 2.0 * (std::sqrt(m / r) - 1.0)));
    return {beta, alpha};
  }
  }
  return {};
}

/// Optimizer coordinates: log of positive parameters, identity for location.
inline std::vector<double> to_free(Family f, const std::vector<double>& p) {
  std::vector<double> e(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) e[i] = parameter_unbounded(f, i) ? p[i] : std::log(p[i]);
  return e;
}

inline std::vector<double> from_free(Family f, const std::vector<double>& e) {
  std::vector<double> p(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) p[i] = parameter_unbounded(f, i) ? e[i] : std::exp(e[i]);
  return p;
}

inline std::vector<ConfidenceInterval> wald_intervals(Family f, const std::vector<double>& p, const SampleSet& s) {
  std::vector<double> h(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) h[i] = 1e-5 * std::max(std::abs(p[i]), 1e-8);
  auto negll = [&](const std::vector<double>& q) { return -log_likelihood(f, q, s); };
  const auto info = opt::invert(opt::hessian(negll, p, h));
  if (!info) throw FitError(f, "observed information matrix is singular");
  std::vector<ConfidenceInterval> ci(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double var = (*info)[i][i];
    if (!(var > 0.0) || !std::isfinite(var)) throw FitError(f, "observed information is not positive definite");
    const double half = 1.959963984540054 * std::sqrt(var);
    ci[i] = {p[i] - half, p[i] + half};
  }
  return ci;
}

inline std::optional<std::vector<double>> closed_form_mle(Family f, const SampleSet& s) {
  switch (f) {
  case Family::Exponential: return std::vector<double>{s.mean()};
  case Family::Lognormal: return std::vector<double>{s.mean_log(), std::sqrt(s.var_log())};
  case Family::Rayleigh: return std::vector<double>{std::sqrt(0.5 * s.mean_sq())};
  case Family::InverseGaussian: {
    const double m = s.mean();
    const double inv = s.mean_inv() - 1.0 / m;
    if (!(inv > 0.0)) return std::nullopt;
    return std::vector<double>{m, 1.0 / inv};
  }
  default: return std::nullopt;
  }
}

} // namespace detail

/// Maximizes the log-likelihood numerically: Nelder-Mead from a moment-type
/// start, then Newton steps until the relative parameter step is below 1e-9.
inline std::vector<double> numeric_mle(Family f, const SampleSet& s) {
  const auto start = detail::to_free(f, detail::initial_guess(f, s));
  const double n = static_cast<double>(s.size());
  auto objective = [&](const std::vector<double>& e) { return -log_likelihood(f, detail::from_free(f, e), s) / n; };
  const auto nm = opt::nelder_mead(objective, start, 0.1, 1e-7, 4000);
  if (!std::isfinite(nm.value)) throw FitError(f, "log-likelihood is not finite at any simplex vertex");
  const auto polished = opt::newton_minimize(objective, nm.x, 1e-4, 1e-9, 60);
  if (!polished.converged) throw FitError(f, "optimizer did not converge");
  return detail::from_free(f, polished.x);
}

inline double rmse_cdf(std::span<const double> samples, const Distribution& dist, std::size_t grid = 1000);

/// Maximum-likelihood fit with 95% Wald intervals from the observed
/// information. Closed forms are used for exponential, lognormal, Rayleigh,
/// and inverse Gaussian.
inline FitResult fit_mle(std::span<const double> samples, Family family) {
  const SampleSet s(samples, kMinFitSamples);
  FitResult r;
  r.family = family;
  if (auto cf = detail::closed_form_mle(family, s)) r.params = *cf;
  else r.params = numeric_mle(family, s);
  r.loglik = log_likelihood(family, r.params, s);
  if (!std::isfinite(r.loglik)) throw FitError(family, "log-likelihood at the estimate is not finite");
  r.ci95 = detail::wald_intervals(family, r.params, s);
  r.rmse = rmse_cdf(samples, r.distribution());
  return r;
}

/// Right-continuous empirical distribution function.
class EmpiricalCdf {
public:
  explicit EmpiricalCdf(std::span<const double> samples) : sorted_(samples.begin(), samples.end()) {
    if (sorted_.empty()) throw std::invalid_argument("empirical_cdf: no samples");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  const std::vector<double>& support() const noexcept { return sorted_; }
  double min() const noexcept { return sorted_.front(); }
  double max() const noexcept { return sorted_.back(); }

private:
  std::vector<double> sorted_;
};

inline EmpiricalCdf empirical_cdf(std::span<const double> samples) { return EmpiricalCdf(samples); }

/// Root-mean-square gap between empirical and fitted CDFs over `grid` evenly
/// spaced points from the smallest to the largest sample.
inline double rmse_cdf(std::span<const double> samples, const Distribution& dist, std::size_t grid) {
  const EmpiricalCdf F(samples);
  if (grid < 2) throw std::invalid_argument("rmse_cdf: grid needs at least two points");
  const double lo = F.min();
  const double hi = F.max();
  long double acc = 0.0L;
  for (std::size_t i = 0; i < grid; ++i) {
    const double x = (i + 1 == grid) ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    const double d = F(x) - dist.cdf(x);
    acc += static_cast<long double>(d) * d;
  }
  return std::sqrt(static_cast<double>(acc / grid));
}

inline double rmse_cdf(std::span<const double> samples, const FitResult& fit) {
  return rmse_cdf(samples, fit.distribution(), 1000);
}

struct FitFailure {
  Family family;
  std::size_t position; ///< index in the requested family list
  std::string message;
};

struct RankedFits {
  std::vector<FitResult> ranked; ///< ascending RMSE, ranks 1..K
  std::vector<FitFailure> failures;
};

/// Fits every family and ranks by RMSE; equal RMSE keeps list order.
inline RankedFits rank_fits(std::span<const double> samples, std::span<const Family> families) {
  if (families.size() < 2) throw std::invalid_argument("rank_fits: need at least two families");
  (void)SampleSet(samples, kMinFitSamples);
  RankedFits out;
  for (std::size_t i = 0; i < families.size(); ++i) {
    try {
      out.ranked.push_back(fit_mle(samples, families[i]));
    } catch (const FitError& e) {
      out.failures.push_back({families[i], i, e.what()});
    } catch (const std::exception& e) {
      out.failures.push_back({families[i], i, FitError(families[i], e.what()).what()});
    }
  }
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const FitResult& a, const FitResult& b) { return a.rmse < b.rmse; });
  for (std::size_t i = 0; i < out.ranked.size(); ++i) out.ranked[i].rank = i + 1;
  return out;
}

namespace detail {

inline std::string join_params(Family f, const std::vector<double>& v) {
  const auto names = parameter_names(f);
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g", v[i]);
    if (i) out += ';';
    out += std::string(names[i]) + '=' + buf;
  }
  return out;
}

} // namespace detail

/// Columns: family, params, ci_lo, ci_hi, rmse, rank. Multi-parameter cells
/// are `name=value` pairs joined by ';'. Failed fits get an empty rank and
/// the error in the params cell.
inline void write_fit_report(std::ostream& out, const RankedFits& fits) {
  out << "family,params,ci_lo,ci_hi,rmse,rank\n";
  char buf[64];
  for (const auto& r : fits.ranked) {
    std::vector<double> lo, hi;
    for (const auto& c : r.ci95) lo.push_back(c.lo), hi.push_back(c.hi);
    std::snprintf(buf, sizeof buf, "%.6e", r.rmse);
    out << family_name(r.family) << ',' << detail::join_params(r.family, r.params) << ','
        << detail::join_params(r.family, lo) << ',' << detail::join_params(r.family, hi) << ',' << buf << ','
        << *r.rank << '\n';
  }
  for (const auto& f : fits.failures) {
    std::string msg = f.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    out << family_name(f.family) << ",\"" << msg << "\",,,,\n";
  }
}

} // namespace rwpp
