#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rwpp/trip_model.hpp"

namespace rwpp {

/// Geographic coordinate in degrees.
struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
  friend bool operator==(const LatLon&, const LatLon&) = default;
};

struct SubSegment {
  double length_m = 0.0;
  double velocity_mps = 0.0;
  friend bool operator==(const SubSegment&, const SubSegment&) = default;
};

struct TraceTransition {
  std::optional<std::array<LatLon, 2>> waypoints;
  std::vector<SubSegment> sub_segments;
  friend bool operator==(const TraceTransition&, const TraceTransition&) = default;
};

/// One routed trip as read from a trace file.
struct RouteTrace {
  std::string trip_id;
  std::vector<TraceTransition> transitions;
  friend bool operator==(const RouteTrace&, const RouteTrace&) = default;
};

/// Per-transition length and (harmonic-mean) velocity. The bearing is known
/// only when the transition carried waypoints.
struct TransitionSample {
  double length = 0.0;   ///< m
  double velocity = 0.0; ///< m/s
  std::optional<double> bearing; ///< radians clockwise from north
};

using SampleTrip = std::vector<TransitionSample>;

/// Parse failure with its location in the input.
class TraceParseError : public std::runtime_error {
public:
  TraceParseError(std::size_t line, std::string trip_id, std::optional<std::size_t> transition, const std::string& what)
      : std::runtime_error(format(line, trip_id, transition, what)), line_(line), trip_id_(std::move(trip_id)),
        transition_(transition) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& trip_id() const noexcept { return trip_id_; }
  std::optional<std::size_t> transition() const noexcept { return transition_; }

private:
  static std::string format(std::size_t line, const std::string& id, std::optional<std::size_t> tr,
                            const std::string& what) {
    std::string s = "trace line " + std::to_string(line);
    if (!id.empty()) s += ", trip '" + id + "'";
    if (tr) s += ", transition " + std::to_string(*tr);
    return s + ": " + what;
  }

  std::size_t line_;
  std::string trip_id_;
  std::optional<std::size_t> transition_;
};

inline constexpr double kEarthRadiusM = 6'371'000.0;

/// Haversine great-circle distance on a spherical Earth.
inline double geodesic_distance(LatLon a, LatLon b) {
  for (const auto& p : {a, b})
    if (!(p.lat >= -90.0 && p.lat <= 90.0) || !std::isfinite(p.lon))
      throw std::domain_error("geodesic_distance: latitude must lie in [-90, 90] and longitude must be finite");
  constexpr double deg = std::numbers::pi / 180.0;
  const double phi1 = a.lat * deg;
  const double phi2 = b.lat * deg;
  const double dphi = (b.lat - a.lat) * deg;
  const double dlmb = (b.lon - a.lon) * deg;
  const double s1 = std::sin(0.5 * dphi);
  const double s2 = std::sin(0.5 * dlmb);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

/// Initial great-circle bearing from a to b, clockwise from north, in (0, 2pi].
inline double initial_bearing(LatLon a, LatLon b) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double phi1 = a.lat * deg;
  const double phi2 = b.lat * deg;
  const double dlmb = (b.lon - a.lon) * deg;
  const double y = std::sin(dlmb) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlmb);
  return wrap_bearing(std::atan2(y, x));
}

namespace detail {

inline RouteTrace parse_trace_object(const nlohmann::json& j, std::size_t line) {
  RouteTrace trace;
  if (!j.is_object()) throw TraceParseError(line, "", std::nullopt, "expected a JSON object");
  if (!j.contains("trip_id") || !j["trip_id"].is_string())
    throw TraceParseError(line, "", std::nullopt, "missing string field 'trip_id'");
  trace.trip_id = j["trip_id"].get<std::string>();
  if (!j.contains("transitions") || !j["transitions"].is_array())
    throw TraceParseError(line, trace.trip_id, std::nullopt, "missing array field 'transitions'");
  const auto& trs = j["transitions"];
  if (trs.empty()) throw TraceParseError(line, trace.trip_id, std::nullopt, "transitions list is empty");
  for (std::size_t m = 0; m < trs.size(); ++m) {
    const auto& t = trs[m];
    auto fail = [&](const std::string& what) { return TraceParseError(line, trace.trip_id, m, what); };
    if (!t.is_object()) throw fail("transition must be an object");
    TraceTransition tr;
    if (t.contains("waypoints")) {
      const auto& w = t["waypoints"];
      if (!w.is_array() || w.size() != 2) throw fail("'waypoints' must hold exactly two [lat, lon] pairs");
      std::array<LatLon, 2> pts{};
      for (std::size_t k = 0; k < 2; ++k) {
        if (!w[k].is_array() || w[k].size() != 2 || !w[k][0].is_number() || !w[k][1].is_number())
          throw fail("waypoint must be a [lat, lon] number pair");
        pts[k] = {w[k][0].get<double>(), w[k][1].get<double>()};
        if (!(pts[k].lat >= -90.0 && pts[k].lat <= 90.0) || !(pts[k].lon >= -180.0 && pts[k].lon <= 180.0))
          throw fail("waypoint coordinates out of range");
      }
      tr.waypoints = pts;
    }
    if (!t.contains("sub_segments") || !t["sub_segments"].is_array())
      throw fail("missing array field 'sub_segments'");
    const auto& subs = t["sub_segments"];
    if (subs.empty()) throw fail("sub_segments list is empty");
    for (std::size_t k = 0; k < subs.size(); ++k) {
      const auto& s = subs[k];
      const std::string where = "sub-segment " + std::to_string(k) + ": ";
      if (!s.is_object() || !s.contains("length_m") || !s.contains("velocity_mps") || !s["length_m"].is_number() ||
          !s["velocity_mps"].is_number())
        throw fail(where + "needs numeric 'length_m' and 'velocity_mps'");
      const SubSegment seg{s["length_m"].get<double>(), s["velocity_mps"].get<double>()};
      if (!(seg.length_m > 0.0) || !std::isfinite(seg.length_m)) throw fail(where + "length must be positive");
      if (!(seg.velocity_mps > 0.0) || !std::isfinite(seg.velocity_mps))
        throw fail(where + "velocity must be positive");
      tr.sub_segments.push_back(seg);
    }
    trace.transitions.push_back(std::move(tr));
  }
  return trace;
}

} // namespace detail

/// Parses newline-delimited JSON, one trip object per line. Blank lines are
/// skipped. Every record is validated before it is returned.
inline std::vector<RouteTrace> parse_trace_file(std::string_view text) {
  std::vector<RouteTrace> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw TraceParseError(line_no, "", std::nullopt, std::string("malformed JSON: ") + e.what());
    }
    out.push_back(detail::parse_trace_object(j, line_no));
    if (end == text.size()) break;
  }
  return out;
}

inline nlohmann::json to_json(const RouteTrace& trace) {
  nlohmann::json trs = nlohmann::json::array();
  for (const auto& t : trace.transitions) {
    nlohmann::json o;
    if (t.waypoints)
      o["waypoints"] = {{(*t.waypoints)[0].lat, (*t.waypoints)[0].lon}, {(*t.waypoints)[1].lat, (*t.waypoints)[1].lon}};
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& s : t.sub_segments) subs.push_back({{"length_m", s.length_m}, {"velocity_mps", s.velocity_mps}});
    o["sub_segments"] = std::move(subs);
    trs.push_back(std::move(o));
  }
  return {{"trip_id", trace.trip_id}, {"transitions", std::move(trs)}};
}

/// One JSON line per trace, each terminated by '\n'.
inline std::string serialize_traces(const std::vector<RouteTrace>& traces) {
  std::string out;
  for (const auto& t : traces) {
    out += to_json(t).dump();
    out += '\n';
  }
  return out;
}

/// Where L_m comes from when reducing a transition.
enum class LengthSource { SubSegmentSum, Waypoints };

/// L_m and the harmonic-mean velocity V_m = L_m / sum_j(L_mj / V_mj).
inline TransitionSample reduce_transition(const TraceTransition& t, LengthSource source = LengthSource::SubSegmentSum) {
  if (t.sub_segments.empty()) throw std::invalid_argument("reduce_transition: no sub-segments");
  double total_len = 0.0;
  double total_time = 0.0;
  for (const auto& s : t.sub_segments) {
    total_len += s.length_m;
    total_time += s.length_m / s.velocity_mps;
  }
  TransitionSample out;
  if (source == LengthSource::Waypoints) {
    if (!t.waypoints) throw std::invalid_argument("reduce_transition: waypoint length requested but no waypoints");
    out.length = geodesic_distance((*t.waypoints)[0], (*t.waypoints)[1]);
    if (!(out.length > 0.0)) throw std::invalid_argument("reduce_transition: coincident waypoints");
  } else {
    out.length = total_len;
  }
  out.velocity = t.sub_segments.size() == 1 ? t.sub_segments.front().velocity_mps : out.length / total_time;
  if (t.waypoints && !((*t.waypoints)[0] == (*t.waypoints)[1]))
    out.bearing = initial_bearing((*t.waypoints)[0], (*t.waypoints)[1]);
  return out;
}

/// Velocity histogram with fixed-width bins starting at 0.
struct Histogram {
  double bin_width = 1.0;
  std::vector<std::size_t> counts;
};

struct CorpusSummary {
  std::size_t trips = 0;
  std::size_t transitions = 0;
  double mean_length = 0.0;
  double median_length = 0.0;
  double mean_velocity = 0.0;
  Histogram velocity_histogram;
  std::vector<double> lengths;    ///< pooled L_m
  std::vector<double> velocities; ///< pooled V_m
  std::vector<SampleTrip> sample_trips;
  std::vector<std::string> warnings;
};

/// Trips with more transitions than this are flagged.
inline constexpr std::size_t kTypicalMaxTransitions = 30;

inline CorpusSummary corpus_statistics(const std::vector<RouteTrace>& traces,
                                       LengthSource source = LengthSource::SubSegmentSum, double bin_width = 1.0) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("corpus_statistics: bin width must be positive");
  CorpusSummary s;
  s.velocity_histogram.bin_width = bin_width;
  for (const auto& trace : traces) {
    if (trace.transitions.size() > kTypicalMaxTransitions)
      s.warnings.push_back("trip '" + trace.trip_id + "' has " + std::to_string(trace.transitions.size()) +
                           " transitions (more than " + std::to_string(kTypicalMaxTransitions) + ")");
    SampleTrip trip;
    for (const auto& t : trace.transitions) {
      const auto sample = reduce_transition(t, source);
      s.lengths.push_back(sample.length);
      s.velocities.push_back(sample.velocity);
      trip.push_back(sample);
    }
    s.sample_trips.push_back(std::move(trip));
  }
  s.trips = traces.size();
  s.transitions = s.lengths.size();
  if (s.transitions == 0) throw std::invalid_argument("corpus_statistics: empty corpus");
  double sum = 0.0;
  for (const double l : s.lengths) sum += l;
  s.mean_length = sum / static_cast<double>(s.transitions);
  std::vector<double> sorted = s.lengths;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median_length = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double vsum = 0.0;
  for (const double v : s.velocities) {
    vsum += v;
    const auto bin = static_cast<std::size_t>(v / bin_width);
    if (bin >= s.velocity_histogram.counts.size()) s.velocity_histogram.counts.resize(bin + 1, 0);
    ++s.velocity_histogram.counts[bin];
  }
  s.mean_velocity = vsum / static_cast<double>(s.transitions);
  return s;
}

/// Converts a planar trip into a trace record, one sub-segment per transition.
/// Waypoints use a local equirectangular projection around `origin`.
inline RouteTrace trip_to_trace(const Trip& trip, std::string trip_id, LatLon origin = {}) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double cos_lat = std::cos(origin.lat * deg);
  auto to_geo = [&](Point p) {
    return LatLon{origin.lat + p.y / kEarthRadiusM / deg, origin.lon + p.x / (kEarthRadiusM * cos_lat) / deg};
  };
  RouteTrace trace{std::move(trip_id), {}};
  for (const auto& t : trip.transitions) {
    TraceTransition tr;
    tr.waypoints = std::array<LatLon, 2>{to_geo(t.start), to_geo(t.end)};
    tr.sub_segments.push_back({t.length(), t.velocity});
    trace.transitions.push_back(std::move(tr));
  }
  return trace;
}

} // namespace rwpp
