#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "rwpp/analytics.hpp"
#include "rwpp/geometry.hpp"
#include "rwpp/ingestion.hpp"
#include "rwpp/trip_model.hpp"

namespace rwpp {

/// Lognormal lengths and mixture velocities.
struct RwpPlusProfile {
  std::string name;
  LengthModel length;
  VelocityMixture mix;

  static RwpPlusProfile from_preset(const CityPreset& p) { return {p.name, p.length, p.velocity}; }
};

/// Nearest-waypoint (Rayleigh) lengths and uniform velocities on [v_min, v_max].
struct LiteratureProfile {
  double lambda_wp = 0.0; ///< waypoints per m^2
  double v_min = 0.0;
  double v_max = 0.0;

  /// Matched to a preset: same mean length, velocity range spanning the
  /// smallest and largest component means.
  static LiteratureProfile matched_to(const LengthModel& length, const VelocityMixture& mix) {
    return {literature_waypoint_density(length), mix.min_mean(), mix.max_mean()};
  }
};

/// Transitions replayed from a corpus; realization r uses trip r mod size.
struct ReplayProfile {
  std::vector<SampleTrip> corpus;
};

using Profile = std::variant<RwpPlusProfile, LiteratureProfile, ReplayProfile>;

struct SimConfig {
  std::size_t realizations = 400;
  double region_side = 40'000.0; ///< m
  std::size_t transitions = 10;
  double lambda = 1e-6; ///< base stations per m^2
  Profile profile = RwpPlusProfile::from_preset(find_preset("manhattan"));
  double pause = 0.0; ///< s per waypoint
  BearingModel bearing = BearingModel::uniform();
  std::uint64_t seed = 1;
  TripMode mode = TripMode::DurationFirst;
  Topology topology = Topology::Planar;
  unsigned threads = 1;
  QuadratureSpec quad{};

  void validate() const {
    if (realizations == 0) throw std::invalid_argument("SimConfig: realizations must be >= 1");
    if (!(region_side > 0.0)) throw std::invalid_argument("SimConfig: region side must be positive");
    if (transitions == 0) throw std::invalid_argument("SimConfig: transitions must be >= 1");
    if (!(lambda > 0.0)) throw std::invalid_argument("SimConfig: lambda must be positive");
    if (!(pause >= 0.0)) throw std::invalid_argument("SimConfig: pause must be >= 0");
    if (const auto* lit = std::get_if<LiteratureProfile>(&profile)) {
      if (!(lit->lambda_wp > 0.0)) throw std::invalid_argument("SimConfig: lambda_wp must be positive");
      if (!(lit->v_min > 0.0 && lit->v_max >= lit->v_min))
        throw std::invalid_argument("SimConfig: literature velocities need 0 < v_min <= v_max");
    }
    if (const auto* rep = std::get_if<ReplayProfile>(&profile)) {
      if (rep->corpus.empty()) throw std::invalid_argument("replay: corpus is empty");
      for (const auto& trip : rep->corpus)
        if (trip.empty()) throw std::invalid_argument("replay: corpus contains an empty trip");
    }
  }
};

/// Outcome of one network realization.
struct RealizationRecord {
  std::uint64_t handoffs = 0;
  double travel_time = 0.0; ///< s
  double pause_time = 0.0;  ///< s
  std::size_t sites = 0;
  std::size_t transitions = 0;
  bool exited_region = false;

  friend bool operator==(const RealizationRecord&, const RealizationRecord&) = default;
};

struct HandoffStats {
  std::uint64_t total_handoffs = 0;
  double total_travel_time = 0.0;
  double total_pause_time = 0.0;
  std::size_t boundary_exits = 0;
  std::vector<RealizationRecord> records;

  friend bool operator==(const HandoffStats&, const HandoffStats&) = default;
};

/// Handoffs per second of movement plus pause.
inline double empirical_rate(const HandoffStats& s) {
  const double denom = s.total_travel_time + s.total_pause_time;
  if (!(denom > 0.0)) throw std::domain_error("empirical_rate: total time is zero");
  return static_cast<double>(s.total_handoffs) / denom;
}

/// Standard error of the ratio estimator sum(N_r) / sum(T_r + S_r) across
/// realizations (delta method). Zero with fewer than two realizations.
inline double rate_standard_error(const HandoffStats& s) {
  const std::size_t n = s.records.size();
  if (n < 2) return 0.0;
  const double rate = empirical_rate(s);
  const double denom = s.total_travel_time + s.total_pause_time;
  double ss = 0.0;
  for (const auto& r : s.records) {
    const double e = static_cast<double>(r.handoffs) - rate * (r.travel_time + r.pause_time);
    ss += e * e;
  }
  const double nn = static_cast<double>(n);
  return std::sqrt(ss * nn / (nn - 1.0)) / denom;
}

namespace detail {

/// Draws the transitions of one realization as (length, velocity, bearing).
class TransitionSource {
public:
  explicit TransitionSource(const SimConfig& cfg) : cfg_(cfg) {
    if (const auto* p = std::get_if<RwpPlusProfile>(&cfg.profile))
      gen_.emplace(p->length, p->mix, cfg.bearing, cfg.pause, cfg.mode, cfg.quad);
  }

  std::vector<TransitionSample> draw(std::size_t realization, Rng& rng) const {
    std::vector<TransitionSample> out;
    if (gen_) {
      const Trip trip = gen_->generate({0.0, 0.0}, cfg_.transitions, rng);
      for (const auto& t : trip.transitions) {
        const Point d = t.end - t.start;
        out.push_back({t.length(), t.velocity, wrap_bearing(std::atan2(d.x, d.y))});
      }
      return out;
    }
    if (const auto* lit = std::get_if<LiteratureProfile>(&cfg_.profile)) {
      for (std::size_t m = 0; m < cfg_.transitions; ++m) {
        const double len = literature_length_sampler(lit->lambda_wp, rng);
        const double v = lit->v_min + (lit->v_max - lit->v_min) * uniform_closed_open(rng);
        out.push_back({len, v, sample_bearing(cfg_.bearing, rng)});
      }
      return out;
    }
    const auto& corpus = std::get<ReplayProfile>(cfg_.profile).corpus;
    out = corpus[realization % corpus.size()];
    for (auto& s : out)
      if (!s.bearing) s.bearing = sample_bearing(cfg_.bearing, rng);
    return out;
  }

private:
  const SimConfig& cfg_;
  std::optional<TripGenerator> gen_;
};

inline RealizationRecord run_realization(const SimConfig& cfg, const TransitionSource& source, std::size_t r) {
  Rng rng = substream(cfg.seed, r);
  const Region region = Region::centered_square(cfg.region_side);
  const Deployment dep = generate_ppp(cfg.lambda, region, rng);
  const auto transitions = source.draw(r, rng);
  RealizationRecord rec;
  rec.sites = dep.sites.size();
  rec.transitions = transitions.size();
  std::optional<HandoffCounter> counter;
  if (!dep.sites.empty()) counter.emplace(dep, cfg.topology);
  Point here = region.center();
  for (const auto& t : transitions) {
    const Point next = here + displacement(t.length, *t.bearing);
    if (counter && dep.sites.size() > 1) rec.handoffs += counter->count(here, next);
    rec.travel_time += t.length / t.velocity;
    rec.pause_time += cfg.pause;
    if (!region.contains(next)) rec.exited_region = true;
    here = (cfg.topology == Topology::Torus) ? region.wrap(next) : next;
  }
  return rec;
}

} // namespace detail

/// Runs every realization and merges them in index order. Each realization
/// draws from its own substream of the master seed, so the result does not
/// depend on the thread count.
inline HandoffStats run_simulation(const SimConfig& cfg) {
  cfg.validate();
  const detail::TransitionSource source(cfg);
  std::vector<RealizationRecord> records(cfg.realizations);
  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.realizations)));
  if (threads == 1) {
    for (std::size_t r = 0; r < cfg.realizations; ++r) records[r] = detail::run_realization(cfg, source, r);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < cfg.realizations; r = next++) {
          try {
            records[r] = detail::run_realization(cfg, source, r);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    pool.clear();
    if (error) std::rethrow_exception(error);
  }
  HandoffStats stats;
  for (const auto& rec : records) {
    stats.total_handoffs += rec.handoffs;
    stats.total_travel_time += rec.travel_time;
    stats.total_pause_time += rec.pause_time;
    if (rec.exited_region) ++stats.boundary_exits;
  }
  stats.records = std::move(records);
  return stats;
}

/// Replays corpus trips over fresh Poisson deployments.
inline HandoffStats replay_trips(const std::vector<SampleTrip>& corpus, SimConfig cfg) {
  if (corpus.empty()) throw std::invalid_argument("replay_trips: corpus is empty");
  cfg.profile = ReplayProfile{corpus};
  return run_simulation(cfg);
}

/// Closed-form rate for the configured profile; NaN where no closed form is
/// provided (literature and replay profiles). A Poisson deployment is
/// isotropic, so the angle between path and cell boundary is uniform whatever
/// the movement bearing; cfg.bearing does not enter.
inline double theory_rate(const SimConfig& cfg) {
  if (const auto* p = std::get_if<RwpPlusProfile>(&cfg.profile))
    return handoff_rate({p->length, p->mix, cfg.lambda, cfg.pause, BearingModel::uniform()}, cfg.quad);
  return std::numeric_limits<double>::quiet_NaN();
}

struct SweepRow {
  double lambda_per_km2 = 0.0;
  double empirical_rate = 0.0;
  double theory_rate = 0.0;
  double stderr_rate = 0.0;
  std::size_t realizations = 0;
  std::size_t boundary_exits = 0;
};

/// Seed used for the k-th point of a lambda sweep.
inline std::uint64_t sweep_seed(std::uint64_t master, std::size_t k) { return derive_seed(master, 0x5EEDull + k); }

inline std::vector<SweepRow> sweep_lambda(SimConfig cfg, std::span<const double> lambda_per_km2) {
  if (lambda_per_km2.empty()) throw std::invalid_argument("sweep: lambda grid is empty");
  std::vector<SweepRow> rows;
  const std::uint64_t master = cfg.seed;
  for (std::size_t k = 0; k < lambda_per_km2.size(); ++k) {
    cfg.lambda = lambda_per_km2[k] * 1e-6;
    cfg.seed = sweep_seed(master, k);
    const HandoffStats stats = run_simulation(cfg);
    rows.push_back({lambda_per_km2[k], empirical_rate(stats), theory_rate(cfg), rate_standard_error(stats),
                    cfg.realizations, stats.boundary_exits});
  }
  return rows;
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Columns: lambda_per_km2, empirical_rate, theory_rate, stderr, n_realizations.
inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "lambda_per_km2,empirical_rate,theory_rate,stderr,n_realizations\n";
  for (const auto& r : rows)
    out << format_number(r.lambda_per_km2) << ',' << format_number(r.empirical_rate) << ','
        << format_number(r.theory_rate) << ',' << format_number(r.stderr_rate) << ',' << r.realizations << '\n';
}

} // namespace rwpp
