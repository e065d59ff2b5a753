#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace rwpp {

/// Controls the per-component velocity quadrature used by the duration law.
struct QuadratureSpec {
  std::size_t nodes = 64;      ///< Gauss-Legendre nodes per mixture component
  double half_width = 10.0;    ///< integration half-width in units of sigma_d
  double abs_tolerance = 1e-12;
  double velocity_floor = 1e-6; ///< lower clip of the velocity range (m/s)

  void validate() const {
    if (nodes < 16) throw std::invalid_argument("QuadratureSpec: node count must be >= 16");
    if (half_width < 8.0) throw std::invalid_argument("QuadratureSpec: half-width must be >= 8 sigma");
    if (!(abs_tolerance > 0.0)) throw std::invalid_argument("QuadratureSpec: tolerance must be positive");
    if (!(velocity_floor > 0.0)) throw std::invalid_argument("QuadratureSpec: velocity floor must be positive");
  }
};

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(std::size_t n) : nodes(n), weights(n) {
    if (n == 0) throw std::invalid_argument("GaussLegendre: n must be positive");
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
      // Tricomi initial guess, then Newton on P_n.
      double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
          const double kk = static_cast<double>(k);
          const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
          p0 = p1;
          p1 = p2;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      // Recompute derivative at the converged node.
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      nodes[i] = -x;
      weights[i] = w;
      nodes[n - 1 - i] = x;
      weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
  }

  /// Integrates f over [a, b].
  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(mid + half * nodes[i]);
    return sum * half;
  }
};

} // namespace rwpp
