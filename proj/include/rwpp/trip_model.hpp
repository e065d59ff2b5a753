#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rwpp/duration.hpp"
#include "rwpp/models.hpp"
#include "rwpp/point.hpp"
#include "rwpp/random.hpp"

namespace rwpp {

/// One straight-line leg of a trip.
struct Transition {
  Point start;
  Point end;
  double velocity = 0.0; ///< m/s
  double pause = 0.0;    ///< s, spent at `end`

  double length() const noexcept { return distance(start, end); }
  double duration() const noexcept { return length() / velocity; }
};

/// Ordered, chained transitions.
struct Trip {
  std::vector<Transition> transitions;

  std::size_t size() const noexcept { return transitions.size(); }
  double travel_time() const noexcept {
    double s = 0.0;
    for (const auto& t : transitions) s += t.duration();
    return s;
  }
  double pause_time() const noexcept {
    double s = 0.0;
    for (const auto& t : transitions) s += t.pause;
    return s;
  }
};

/// How a transition's length is produced.
///  - LengthFirst: L from the lognormal law, V from the mixture, independent.
///  - DurationFirst: V from the mixture and T from the duration law,
///    independent, then L = V T.
enum class TripMode { LengthFirst, DurationFirst };

/// Displacement for a bearing measured clockwise from north, in (east, north).
inline Point displacement(double length, double bearing) noexcept {
  return {length * std::sin(bearing), length * std::cos(bearing)};
}

/// Holds the models of one trip profile and produces trips from it. The
/// duration law is built once on construction when DurationFirst is used.
class TripGenerator {
public:
  TripGenerator(LengthModel length, VelocityMixture mix, BearingModel bearing, double pause,
                TripMode mode = TripMode::LengthFirst, const QuadratureSpec& quad = {})
      : length_(length), mix_(std::move(mix)), bearing_(bearing), pause_(pause), mode_(mode) {
    if (!(pause >= 0.0)) throw std::invalid_argument("TripGenerator: pause must be >= 0");
    if (mode_ == TripMode::DurationFirst) duration_.emplace(length_, mix_, quad);
  }

  TripMode mode() const noexcept { return mode_; }
  const LengthModel& length_model() const noexcept { return length_; }
  const VelocityMixture& mixture() const noexcept { return mix_; }

  Trip generate(Point start, std::size_t n_transitions, Rng& rng) const {
    if (n_transitions == 0) throw std::invalid_argument("generate_trip: need at least one transition");
    Trip trip;
    trip.transitions.reserve(n_transitions);
    Point here = start;
    for (std::size_t m = 0; m < n_transitions; ++m) {
      double len = 0.0;
      double v = 0.0;
      if (mode_ == TripMode::LengthFirst) {
        len = sample_length(length_, rng);
        v = sample_velocity(mix_, rng);
      } else {
        v = sample_velocity(mix_, rng);
        len = v * duration_->sample(rng);
      }
      const double theta = sample_bearing(bearing_, rng);
      const Point next = here + displacement(len, theta);
      trip.transitions.push_back({here, next, v, pause_});
      here = next;
    }
    return trip;
  }

private:
  LengthModel length_;
  VelocityMixture mix_;
  BearingModel bearing_;
  double pause_;
  TripMode mode_;
  std::optional<DurationLaw> duration_;
};

inline Trip generate_trip(Point start, std::size_t n_transitions, const LengthModel& length,
                          const VelocityMixture& mix, const BearingModel& bearing, double pause,
                          TripMode mode, Rng& rng) {
  return TripGenerator(length, mix, bearing, pause, mode).generate(start, n_transitions, rng);
}

} // namespace rwpp
