#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace rwpp::opt {

using Vector = std::vector<double>;
using Matrix = std::vector<Vector>;

struct NelderMeadResult {
  Vector x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Minimizes f by the Nelder-Mead simplex method. Stops when the simplex
/// diameter falls below `xtol` (absolute, in the coordinates of x).
template <class F>
NelderMeadResult nelder_mead(F&& f, Vector x0, double initial_step, double xtol, std::size_t max_evals) {
  const std::size_t n = x0.size();
  std::vector<Vector> pts(n + 1, x0);
  Vector vals(n + 1);
  std::size_t evals = 0;
  auto eval = [&](const Vector& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += initial_step;
  for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  bool converged = false;
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k) diameter = std::max(diameter, std::abs(pts[i][k] - pts[best][k]));
    if (diameter < xtol) {
      converged = true;
      break;
    }

    Vector centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / static_cast<double>(n);
    auto along = [&](double coef) {
      Vector x(n);
      for (std::size_t k = 0; k < n; ++k) x[k] = centroid[k] + coef * (pts[worst][k] - centroid[k]);
      return x;
    };

    const Vector xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      const Vector xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) pts[worst] = xe, vals[worst] = fe;
      else pts[worst] = xr, vals[worst] = fr;
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Vector xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      vals[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  return {pts[static_cast<std::size_t>(it - vals.begin())], *it, evals, converged};
}

/// Central-difference gradient with per-coordinate steps h.
template <class F>
Vector gradient(F&& f, const Vector& x, const Vector& h) {
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vector a = x, b = x;
    a[i] += h[i];
    b[i] -= h[i];
    g[i] = (f(a) - f(b)) / (2.0 * h[i]);
  }
  return g;
}

/// Central-difference Hessian with per-coordinate steps h.
template <class F>
Matrix hessian(F&& f, const Vector& x, const Vector& h) {
  const std::size_t n = x.size();
  Matrix H(n, Vector(n, 0.0));
  const double f0 = f(x);
  for (std::size_t i = 0; i < n; ++i) {
    Vector a = x, b = x;
    a[i] += h[i];
    b[i] -= h[i];
    H[i][i] = (f(a) - 2.0 * f0 + f(b)) / (h[i] * h[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      Vector pp = x, pm = x, mp = x, mm = x;
      pp[i] += h[i], pp[j] += h[j];
      pm[i] += h[i], pm[j] -= h[j];
      mp[i] -= h[i], mp[j] += h[j];
      mm[i] -= h[i], mm[j] -= h[j];
      H[i][j] = H[j][i] = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h[i] * h[j]);
    }
  }
  return H;
}

/// Inverse of a small symmetric matrix by Gauss-Jordan elimination with
/// partial pivoting. Empty result when singular.
inline std::optional<Matrix> invert(Matrix a) {
  const std::size_t n = a.size();
  Matrix inv(n, Vector(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (!(std::abs(a[piv][c]) > 0.0)) return std::nullopt;
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    const double d = a[c][c];
    for (std::size_t k = 0; k < n; ++k) a[c][k] /= d, inv[c][k] /= d;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double m = a[r][c];
      for (std::size_t k = 0; k < n; ++k) a[r][k] -= m * a[c][k], inv[r][k] -= m * inv[c][k];
    }
  }
  return inv;
}

struct NewtonResult {
  Vector x;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Newton iterations for a local minimum of f from a nearby start, using
/// finite-difference derivatives and step halving. Converged when the largest
/// coordinate step is below `xtol`.
template <class F>
NewtonResult newton_minimize(F&& f, Vector x, double h, double xtol, std::size_t max_iter) {
  const std::size_t n = x.size();
  const Vector steps(n, h);
  double fx = f(x);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const Vector g = gradient(f, x, steps);
    const auto Hinv = invert(hessian(f, x, steps));
    if (!Hinv) return {x, false, it};
    Vector dx(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) dx[i] -= (*Hinv)[i][k] * g[k];
    double scale = 1.0;
    for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
      Vector xn = x;
      for (std::size_t i = 0; i < n; ++i) xn[i] += scale * dx[i];
      const double fn = f(xn);
      double biggest = 0.0;
      for (std::size_t i = 0; i < n; ++i) biggest = std::max(biggest, std::abs(scale * dx[i]));
      if (biggest < xtol) {
        // Below the resolution of f; accept without requiring descent.
        if (std::isfinite(fn) && fn <= fx + 1e-12 * std::abs(fx)) x = xn;
        return {x, true, it};
      }
      if (std::isfinite(fn) && fn <= fx) {
        x = xn;
        fx = fn;
        break;
      }
    }
  }
  return {x, false, max_iter};
}

} // namespace rwpp::opt
