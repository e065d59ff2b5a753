#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rwpp/point.hpp"
#include "rwpp/random.hpp"

namespace rwpp {

/// Axis-aligned rectangle.
class Region {
public:
  Region(Point min_corner, Point max_corner) : min_(min_corner), max_(max_corner) {
    if (!(max_.x > min_.x && max_.y > min_.y) || !std::isfinite(area()))
      throw std::invalid_argument("Region: max corner must exceed min corner in both axes");
  }

  /// Square of side `side` centred on the origin.
  static Region centered_square(double side) { return Region({-0.5 * side, -0.5 * side}, {0.5 * side, 0.5 * side}); }

  Point min() const noexcept { return min_; }
  Point max() const noexcept { return max_; }
  double width() const noexcept { return max_.x - min_.x; }
  double height() const noexcept { return max_.y - min_.y; }
  double area() const noexcept { return width() * height(); }
  Point center() const noexcept { return {0.5 * (min_.x + max_.x), 0.5 * (min_.y + max_.y)}; }

  bool contains(Point p) const noexcept { return p.x >= min_.x && p.x <= max_.x && p.y >= min_.y && p.y <= max_.y; }

  /// Maps a point into the region, treating it as a torus.
  Point wrap(Point p) const noexcept {
    auto w = [](double v, double lo, double span) {
      double r = std::fmod(v - lo, span);
      if (r < 0.0) r += span;
      return lo + r;
    };
    return {w(p.x, min_.x, width()), w(p.y, min_.y, height())};
  }

  friend bool operator==(const Region&, const Region&) = default;

private:
  Point min_;
  Point max_;
};

/// Base-station sites of one network realization.
struct Deployment {
  double intensity = 0.0; ///< sites per m^2
  Region region = Region({0, 0}, {1, 1});
  std::vector<Point> sites;

  Deployment(double lambda, Region r, std::vector<Point> s) : intensity(lambda), region(r), sites(std::move(s)) {
    for (const auto& p : sites)
      if (!region.contains(p)) throw std::invalid_argument("Deployment: site outside region");
  }
};

/// Planar: plain Euclidean plane. Torus: the region wraps around.
enum class Topology { Planar, Torus };

inline constexpr double kMaxExpectedSites = 1e8;

/// Poisson variate with the given mean. Inversion for small means,
/// Hormann's PTRS transformed rejection otherwise.
inline std::uint64_t sample_poisson(double mean, Rng& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw std::invalid_argument("sample_poisson: bad mean");
  if (mean == 0.0) return 0;
  if (mean < 10.0) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = uniform_open_closed(rng);
    while (prod > limit) {
      ++k;
      prod *= uniform_open_closed(rng);
    }
    return k;
  }
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform_closed_open(rng) - 0.5;
    const double v = uniform_closed_open(rng);
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <= -mean + k * loglam - std::lgamma(k + 1.0))
      return static_cast<std::uint64_t>(k);
  }
}

/// Homogeneous Poisson point process on a rectangle.
inline Deployment generate_ppp(double lambda, const Region& region, Rng& rng) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("generate_ppp: intensity must be positive");
  const double mean = lambda * region.area();
  if (mean > kMaxExpectedSites)
    throw std::length_error("generate_ppp: expected site count " + std::to_string(mean) + " exceeds the supported maximum");
  const auto n = sample_poisson(mean, rng);
  std::vector<Point> sites;
  sites.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double x = region.min().x + region.width() * uniform_closed_open(rng);
    const double y = region.min().y + region.height() * uniform_closed_open(rng);
    sites.push_back({x, y});
  }
  return Deployment(lambda, region, std::move(sites));
}

/// Index of the closest site; ties go to the lowest index.
inline std::size_t nearest_site(Point p, std::span<const Point> sites) {
  if (sites.empty()) throw std::invalid_argument("nearest_site: empty deployment");
  std::size_t best = 0;
  double best_d = squared_norm(p - sites[0]);
  for (std::size_t i = 1; i < sites.size(); ++i) {
    const double d = squared_norm(p - sites[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

inline std::size_t nearest_site(Point p, const Deployment& dep, Topology topo = Topology::Planar) {
  if (dep.sites.empty()) throw std::invalid_argument("nearest_site: empty deployment");
  if (topo == Topology::Planar) return nearest_site(p, std::span<const Point>(dep.sites));
  const Point q = dep.region.wrap(p);
  const double w = dep.region.width();
  const double h = dep.region.height();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dep.sites.size(); ++i) {
    double dx = std::abs(q.x - dep.sites[i].x);
    double dy = std::abs(q.y - dep.sites[i].y);
    dx = std::min(dx, w - dx);
    dy = std::min(dy, h - dy);
    const double d = dx * dx + dy * dy;
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

namespace detail {

/// Walks the directed segment a -> b through the cells of `candidates`
/// (indices into `pts`, sorted ascending). Starting from `current`, the next
/// cell boundary is the first parameter where some other candidate becomes
/// as close as the current one; bisectors are lines, so each is one linear
/// solve. Returns the number of cell changes and updates `current`.
/// `owner` maps point indices to site identities; switching between points
/// with the same owner is not counted.
inline std::size_t bisector_walk(Point a, Point b, std::span<const Point> pts, std::span<const std::size_t> owner,
                                 std::span<const std::size_t> candidates, std::size_t& current) {
  const Point d = b - a;
  std::size_t count = 0;
  double t = 0.0;
  const std::size_t cap = 4 * candidates.size() + 1024;
  for (std::size_t step = 0; step < cap; ++step) {
    const Point p = a + t * d;
    const Point c = pts[current];
    double best_t = std::numeric_limits<double>::infinity();
    double best_slope = 0.0;
    std::size_t best = current;
    for (const std::size_t j : candidates) {
      if (j == current) continue;
      const Point s = pts[j];
      const Point diff = s - c;
      const double slope = 2.0 * dot(d, diff);
      if (!(slope > 0.0)) continue;
      // f(p) = |p - c|^2 - |p - s|^2, nonpositive while c is nearest.
      const double f = dot(diff, 2.0 * p - c - s);
      const double tj = t + std::max(0.0, -f / slope);
      if (tj > 1.0) continue;
      constexpr double tol = 1e-12;
      if (best == current || tj < best_t - tol) {
        best_t = tj;
        best_slope = slope;
        best = j;
      } else if (std::abs(tj - best_t) <= tol && slope > best_slope) {
        // Several bisectors meet here: continue into the cell that is
        // nearest just after the crossing.
        best_slope = slope;
        best = j;
      }
    }
    if (best == current) return count;
    if (owner[best] != owner[current]) ++count;
    current = best;
    t = best_t;
  }
  throw std::logic_error("bisector_walk: iteration cap reached");
}

/// Uniform bucket grid over a point set.
class SiteGrid {
public:
  SiteGrid() = default;
  SiteGrid(std::span<const Point> pts, double cell) : cell_(cell) {
    if (pts.empty()) return;
    lo_ = pts[0];
    Point hi = pts[0];
    for (const auto& p : pts) {
      lo_.x = std::min(lo_.x, p.x);
      lo_.y = std::min(lo_.y, p.y);
      hi.x = std::max(hi.x, p.x);
      hi.y = std::max(hi.y, p.y);
    }
    nx_ = static_cast<std::size_t>(std::floor((hi.x - lo_.x) / cell_)) + 1;
    ny_ = static_cast<std::size_t>(std::floor((hi.y - lo_.y) / cell_)) + 1;
    start_.assign(nx_ * ny_ + 1, 0);
    std::vector<std::size_t> bucket(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      bucket[i] = cell_of(pts[i]);
      ++start_[bucket[i] + 1];
    }
    for (std::size_t k = 1; k < start_.size(); ++k) start_[k] += start_[k - 1];
    items_.resize(pts.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) items_[fill[bucket[i]]++] = i;
  }

  /// All indices within distance r of p, ascending.
  void query(Point p, double r, std::span<const Point> pts, std::vector<std::size_t>& out) const {
    out.clear();
    if (items_.empty()) return;
    const auto clampi = [](double v, std::size_t n) -> std::size_t {
      if (v < 0.0) return 0;
      if (v >= static_cast<double>(n)) return n - 1;
      return static_cast<std::size_t>(v);
    };
    const double fx0 = std::floor((p.x - r - lo_.x) / cell_);
    const double fx1 = std::floor((p.x + r - lo_.x) / cell_);
    const double fy0 = std::floor((p.y - r - lo_.y) / cell_);
    const double fy1 = std::floor((p.y + r - lo_.y) / cell_);
    if (fx1 < 0.0 || fy1 < 0.0 || fx0 >= static_cast<double>(nx_) || fy0 >= static_cast<double>(ny_)) return;
    const std::size_t x0 = clampi(fx0, nx_), x1 = clampi(fx1, nx_);
    const std::size_t y0 = clampi(fy0, ny_), y1 = clampi(fy1, ny_);
    const double r2 = r * r;
    for (std::size_t iy = y0; iy <= y1; ++iy)
      for (std::size_t ix = x0; ix <= x1; ++ix) {
        const std::size_t k = iy * nx_ + ix;
        for (std::size_t q = start_[k]; q < start_[k + 1]; ++q)
          if (squared_norm(pts[items_[q]] - p) <= r2) out.push_back(items_[q]);
      }
    std::sort(out.begin(), out.end());
  }

private:
  std::size_t cell_of(Point p) const noexcept {
    const auto ix = std::min(nx_ - 1, static_cast<std::size_t>((p.x - lo_.x) / cell_));
    const auto iy = std::min(ny_ - 1, static_cast<std::size_t>((p.y - lo_.y) / cell_));
    return iy * nx_ + ix;
  }

  double cell_ = 1.0;
  Point lo_{};
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> items_;
};

} // namespace detail

/// Exact handoff counter for one deployment. Segments are walked in chunks of
/// length at most `chunk`; a site that is nearest anywhere on a chunk starting
/// at p lies within 2*chunk + |p - nearest(p)| of p, so only those sites are
/// examined and the count stays exact.
class HandoffCounter {
public:
  explicit HandoffCounter(const Deployment& dep, Topology topo = Topology::Planar)
      : region_(dep.region), topo_(topo) {
    if (dep.sites.empty()) throw std::invalid_argument("HandoffCounter: empty deployment");
    const double density = static_cast<double>(dep.sites.size()) / dep.region.area();
    chunk_ = 1.0 / std::sqrt(density);
    if (topo_ == Topology::Planar) {
      pts_ = dep.sites;
      owner_.resize(pts_.size());
      for (std::size_t i = 0; i < owner_.size(); ++i) owner_[i] = i;
    } else {
      // 3x3 periodic images; each image remembers the site it copies.
      const double w = region_.width();
      const double h = region_.height();
      chunk_ = std::min(chunk_, 0.25 * std::min(w, h));
      for (int oy = -1; oy <= 1; ++oy)
        for (int ox = -1; ox <= 1; ++ox)
          for (std::size_t i = 0; i < dep.sites.size(); ++i) {
            pts_.push_back({dep.sites[i].x + ox * w, dep.sites[i].y + oy * h});
            owner_.push_back(i);
          }
    }
    grid_ = detail::SiteGrid(pts_, chunk_);
  }

  std::size_t site_count() const noexcept { return topo_ == Topology::Planar ? pts_.size() : pts_.size() / 9; }

  /// Nearest site identity; lowest index on ties.
  std::size_t nearest(Point p) const { return owner_[nearest_point(map_in(p))]; }

  /// Number of nearest-site changes along the directed segment a -> b.
  std::size_t count(Point a, Point b) const {
    if (topo_ == Topology::Torus) {
      // Shift so the start lies in the base region; the segment then stays
      // inside the image block because chunks are short.
      const Point a0 = region_.wrap(a);
      b = b + (a0 - a);
      a = a0;
    }
    const double len = distance(a, b);
    if (!(len > 0.0)) return 0;
    const auto pieces = static_cast<std::size_t>(std::ceil(len / chunk_));
    std::size_t current = nearest_point(a);
    std::size_t total = 0;
    std::vector<std::size_t> cand;
    Point offset{0.0, 0.0};
    Point p = a;
    for (std::size_t k = 1; k <= pieces; ++k) {
      const Point raw = (k == pieces) ? b : a + (static_cast<double>(k) / static_cast<double>(pieces)) * (b - a);
      Point q = raw + offset;
      if (topo_ == Topology::Torus && !inside_images(q)) {
        // Re-anchor in the base region; the nearest image moves with it.
        const Point p0 = region_.wrap(p);
        const Point shift = p0 - p;
        offset = offset + shift;
        q = q + shift;
        p = p0;
        current = nearest_point(p);
      }
      const double reach = 2.0 * distance(p, q) + distance(p, pts_[current]);
      grid_.query(p, reach * (1.0 + 1e-9) + 1e-9, pts_, cand);
      total += detail::bisector_walk(p, q, pts_, owner_, cand, current);
      p = q;
    }
    return total;
  }

private:
  Point map_in(Point p) const { return topo_ == Topology::Torus ? region_.wrap(p) : p; }

  bool inside_images(Point p) const {
    const double w = region_.width();
    const double h = region_.height();
    return p.x >= region_.min().x - 0.5 * w && p.x <= region_.max().x + 0.5 * w &&
           p.y >= region_.min().y - 0.5 * h && p.y <= region_.max().y + 0.5 * h;
  }

  std::size_t nearest_point(Point p) const {
    std::vector<std::size_t> cand;
    double r = chunk_;
    for (;;) {
      grid_.query(p, r, pts_, cand);
      if (!cand.empty()) break;
      r *= 2.0;
    }
    std::size_t best = cand.front();
    double best_d = squared_norm(p - pts_[best]);
    for (const std::size_t j : cand) {
      const double dj = squared_norm(p - pts_[j]);
      if (dj < best_d || (dj == best_d && owner_[j] < owner_[best])) {
        best_d = dj;
        best = j;
      }
    }
    return best;
  }

  Region region_;
  Topology topo_;
  double chunk_ = 1.0;
  std::vector<Point> pts_;
  std::vector<std::size_t> owner_;
  detail::SiteGrid grid_;
};

/// Handoffs along a -> b: the number of Voronoi cell boundaries crossed.
inline std::size_t count_handoffs(Point a, Point b, const Deployment& dep, Topology topo = Topology::Planar) {
  if (dep.sites.empty()) throw std::invalid_argument("count_handoffs: empty deployment");
  if (!(distance(a, b) > 0.0)) throw std::invalid_argument("count_handoffs: segment must have positive length");
  if (dep.sites.size() == 1 && topo == Topology::Planar) return 0;
  return HandoffCounter(dep, topo).count(a, b);
}

/// Monte Carlo estimate of cell-boundary length per unit area. Random needles
/// of length `needle` with uniform orientation are dropped in an inner window
/// (margin 3/sqrt(lambda) + needle from the region edge, where the tessellation
/// is unaffected by the missing outside sites). E[crossings] = 2 needle B / pi.
/// needle <= 0 selects 1/sqrt(lambda).
inline double boundary_length_intensity(const Deployment& dep, Rng& rng, std::size_t n_probes, double needle = 0.0) {
  if (dep.sites.empty()) throw std::invalid_argument("boundary_length_intensity: empty deployment");
  if (n_probes == 0) throw std::invalid_argument("boundary_length_intensity: need at least one probe");
  if (dep.sites.size() == 1) return 0.0;
  const double density = static_cast<double>(dep.sites.size()) / dep.region.area();
  const double scale = 1.0 / std::sqrt(dep.intensity > 0.0 ? dep.intensity : density);
  if (!(needle > 0.0)) needle = scale;
  const double margin = std::min(3.0 * scale + needle, 0.25 * std::min(dep.region.width(), dep.region.height()));
  const Point lo = dep.region.min() + Point{margin, margin};
  const double w = dep.region.width() - 2.0 * margin;
  const double h = dep.region.height() - 2.0 * margin;
  const HandoffCounter counter(dep);
  double crossings = 0.0;
  for (std::size_t i = 0; i < n_probes; ++i) {
    const Point c = lo + Point{w * uniform_closed_open(rng), h * uniform_closed_open(rng)};
    const double phi = std::numbers::pi * uniform_closed_open(rng);
    const Point half = (0.5 * needle) * Point{std::cos(phi), std::sin(phi)};
    crossings += static_cast<double>(counter.count(c - half, c + half));
  }
  return 0.5 * std::numbers::pi * crossings / (static_cast<double>(n_probes) * needle);
}

inline nlohmann::json to_json(const Deployment& dep) {
  nlohmann::json sites = nlohmann::json::array();
  for (const auto& s : dep.sites) sites.push_back({s.x, s.y});
  return {{"intensity", dep.intensity},
          {"region", {{"min", {dep.region.min().x, dep.region.min().y}}, {"max", {dep.region.max().x, dep.region.max().y}}}},
          {"sites", std::move(sites)}};
}

inline Deployment deployment_from_json(const nlohmann::json& j) {
  try {
    const auto mn = j.at("region").at("min");
    const auto mx = j.at("region").at("max");
    Region region({mn.at(0).get<double>(), mn.at(1).get<double>()}, {mx.at(0).get<double>(), mx.at(1).get<double>()});
    std::vector<Point> sites;
    for (const auto& s : j.at("sites")) sites.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
    return Deployment(j.at("intensity").get<double>(), region, std::move(sites));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("deployment JSON: ") + e.what());
  }
}

} // namespace rwpp
