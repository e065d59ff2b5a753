#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rwpp/analytics.hpp"
#include "rwpp/fitting.hpp"
#include "rwpp/ingestion.hpp"
#include "rwpp/montecarlo.hpp"
#include "rwpp/presets.hpp"

namespace rwpp {

/// One batch run. Every field except `threads` and `out` is recorded in the
/// output header; those two do not change the output bytes.
struct ExperimentSpec {
  std::string command = "simulate"; ///< theory | simulate | fit | ingest | compare
  std::string preset = "manhattan"; ///< name, comma list, or "all" (theory only)
  std::vector<double> lambda_grid{0.5, 1.0, 2.0, 4.0}; ///< per km^2
  double pause_s = 0.0;
  std::size_t realizations = 400;
  double region_km = 40.0;
  std::size_t transitions = 10;
  std::uint64_t seed = 1;
  std::string mode = "duration-first"; ///< length-first | duration-first
  std::string bearing = "uniform";     ///< uniform | normal:<mean>,<std>
  std::string topology = "planar";     ///< planar | torus
  std::string trace;                   ///< JSONL route traces
  std::string samples;                 ///< plain numbers, one per line (fit)
  std::string fit_variable = "length"; ///< length | velocity (fit from traces)

  unsigned threads = 1;
  std::string out;
};

inline const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> c{"theory", "simulate", "fit", "ingest", "compare"};
  return c;
}

inline nlohmann::ordered_json to_json(const ExperimentSpec& s) {
  nlohmann::ordered_json j;
  j["command"] = s.command;
  j["preset"] = s.preset;
  j["lambda_grid"] = s.lambda_grid;
  j["pause_s"] = s.pause_s;
  j["realizations"] = s.realizations;
  j["region_km"] = s.region_km;
  j["transitions"] = s.transitions;
  j["seed"] = s.seed;
  j["mode"] = s.mode;
  j["bearing"] = s.bearing;
  j["topology"] = s.topology;
  j["trace"] = s.trace;
  j["samples"] = s.samples;
  j["fit_variable"] = s.fit_variable;
  return j;
}

namespace detail {

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& dst) {
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("config: key '") + key + "' has the wrong type");
  }
}

} // namespace detail

/// Builds a spec from a flat JSON object. Missing keys keep their defaults;
/// unknown keys are rejected.
inline ExperimentSpec spec_from_json(const nlohmann::json& j, ExperimentSpec base = {}) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "command") detail::read_key(j, "command", base.command);
    else if (key == "preset") detail::read_key(j, "preset", base.preset);
    else if (key == "lambda_grid") detail::read_key(j, "lambda_grid", base.lambda_grid);
    else if (key == "pause_s") detail::read_key(j, "pause_s", base.pause_s);
    else if (key == "realizations") detail::read_key(j, "realizations", base.realizations);
    else if (key == "region_km") detail::read_key(j, "region_km", base.region_km);
    else if (key == "transitions") detail::read_key(j, "transitions", base.transitions);
    else if (key == "seed") detail::read_key(j, "seed", base.seed);
    else if (key == "mode") detail::read_key(j, "mode", base.mode);
    else if (key == "bearing") detail::read_key(j, "bearing", base.bearing);
    else if (key == "topology") detail::read_key(j, "topology", base.topology);
    else if (key == "trace") detail::read_key(j, "trace", base.trace);
    else if (key == "samples") detail::read_key(j, "samples", base.samples);
    else if (key == "fit_variable") detail::read_key(j, "fit_variable", base.fit_variable);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  return base;
}

/// Header line written at the top of every output.
inline std::string config_header(const ExperimentSpec& s) { return "# " + to_json(s).dump() + "\n"; }

/// Accepts either a bare JSON object or a previous output whose first line
/// is the `# {...}` header.
inline ExperimentSpec parse_config_text(std::string_view text) {
  std::size_t i = text.find_first_not_of(" \t\r\n");
  if (i == std::string_view::npos) throw std::invalid_argument("config: empty input");
  std::string_view body = text.substr(i);
  if (body.front() == '#') {
    body.remove_prefix(1);
    body = body.substr(0, body.find('\n'));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return spec_from_json(j);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw std::runtime_error("error reading '" + path + "'");
  return ss.str();
}

inline TripMode parse_mode(std::string_view s) {
  if (s == "length-first") return TripMode::LengthFirst;
  if (s == "duration-first") return TripMode::DurationFirst;
  throw std::invalid_argument("mode must be length-first or duration-first, got '" + std::string(s) + "'");
}

inline Topology parse_topology(std::string_view s) {
  if (s == "planar") return Topology::Planar;
  if (s == "torus") return Topology::Torus;
  throw std::invalid_argument("topology must be planar or torus, got '" + std::string(s) + "'");
}

namespace detail {

inline double parse_double(std::string_view s, std::string_view what) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw std::invalid_argument(std::string(what) + ": '" + std::string(s) + "' is not a number");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (std::size_t start = 0;;) {
    const std::size_t end = s.find(sep, start);
    out.push_back(s.substr(start, end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

} // namespace detail

/// "uniform" or "normal:<mean>,<std>" with radians.
inline BearingModel parse_bearing(std::string_view s) {
  if (s == "uniform") return BearingModel::uniform();
  if (s.starts_with("normal:")) {
    const auto parts = detail::split(s.substr(7), ',');
    if (parts.size() == 2)
      return BearingModel::normal(detail::parse_double(parts[0], "bearing"), detail::parse_double(parts[1], "bearing"));
  }
  throw std::invalid_argument("bearing must be 'uniform' or 'normal:<mean>,<std>', got '" + std::string(s) + "'");
}

/// Comma-separated list of positive numbers.
inline std::vector<double> parse_lambda_grid(std::string_view s) {
  std::vector<double> grid;
  if (s.find_first_not_of(" \t") == std::string_view::npos) return grid;
  for (const auto part : detail::split(s, ',')) grid.push_back(detail::parse_double(part, "lambda grid"));
  return grid;
}

/// Plain sample file: one value per line; blank lines and '#' comments skipped.
inline std::vector<double> parse_sample_file(std::string_view text) {
  std::vector<double> out;
  std::size_t line_no = 0;
  for (const auto line : detail::split(text, '\n')) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;
    try {
      out.push_back(detail::parse_double(line, "sample"));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<CityPreset> resolve_presets(std::string_view names) {
  std::vector<CityPreset> out;
  if (names == "all") return city_presets();
  for (const auto n : detail::split(names, ',')) out.push_back(find_preset(n));
  return out;
}

inline void validate(const ExperimentSpec& s) {
  const auto& cmds = experiment_commands();
  if (std::find(cmds.begin(), cmds.end(), s.command) == cmds.end())
    throw std::invalid_argument("unknown command '" + s.command + "'");
  if (s.command == "theory" || s.command == "simulate" || s.command == "compare") {
    (void)resolve_presets(s.preset);
    if (s.lambda_grid.empty()) throw std::invalid_argument("lambda grid is empty");
    for (const double l : s.lambda_grid)
      if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("lambda grid values must be positive");
    if (!(s.pause_s >= 0.0)) throw std::invalid_argument("pause must be >= 0");
    (void)parse_bearing(s.bearing);
  }
  if (s.command == "simulate" || s.command == "compare") {
    if (resolve_presets(s.preset).size() != 1)
      throw std::invalid_argument(s.command + " takes exactly one preset");
    if (s.realizations == 0) throw std::invalid_argument("realizations must be >= 1");
    if (s.transitions == 0) throw std::invalid_argument("transitions must be >= 1");
    if (!(s.region_km > 0.0)) throw std::invalid_argument("region size must be positive");
    (void)parse_mode(s.mode);
    (void)parse_topology(s.topology);
  }
  if (s.command == "fit") {
    if (s.trace.empty() == s.samples.empty()) throw std::invalid_argument("fit needs exactly one of trace or samples");
    if (s.fit_variable != "length" && s.fit_variable != "velocity")
      throw std::invalid_argument("fit_variable must be length or velocity");
  }
  if (s.command == "ingest" && s.trace.empty()) throw std::invalid_argument("ingest needs a trace file");
}

/// Output text plus diagnostics meant for stderr.
struct ExperimentOutput {
  std::string text;
  std::vector<std::string> warnings;
};

inline SimConfig sim_config(const ExperimentSpec& s) {
  SimConfig cfg;
  cfg.realizations = s.realizations;
  cfg.region_side = s.region_km * 1000.0;
  cfg.transitions = s.transitions;
  cfg.profile = RwpPlusProfile::from_preset(resolve_presets(s.preset).front());
  cfg.pause = s.pause_s;
  cfg.bearing = parse_bearing(s.bearing);
  cfg.seed = s.seed;
  cfg.mode = parse_mode(s.mode);
  cfg.topology = parse_topology(s.topology);
  cfg.threads = s.threads;
  return cfg;
}

inline std::vector<RouteTrace> load_traces(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_trace_file(text);
  } catch (const TraceParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

namespace detail {

inline void exit_warnings(ExperimentOutput& out, std::string_view series, std::span<const SweepRow> rows) {
  for (const auto& r : rows)
    if (r.boundary_exits > 0)
      out.warnings.push_back(std::string(series) + " lambda=" + format_number(r.lambda_per_km2) + ": " +
                             std::to_string(r.boundary_exits) + " of " + std::to_string(r.realizations) +
                             " trips left the region");
}

} // namespace detail

inline ExperimentOutput cmd_theory(const ExperimentSpec& s) {
  validate(s);
  std::ostringstream os;
  os << config_header(s);
  // Movement bearing does not change the rate over a Poisson deployment.
  write_theory_csv(os, resolve_presets(s.preset), s.lambda_grid, s.pause_s, BearingModel::uniform());
  return {os.str(), {}};
}

inline ExperimentOutput cmd_simulate(const ExperimentSpec& s) {
  validate(s);
  const auto rows = sweep_lambda(sim_config(s), s.lambda_grid);
  ExperimentOutput out;
  std::ostringstream os;
  os << config_header(s);
  write_sweep_csv(os, rows);
  out.text = os.str();
  detail::exit_warnings(out, "simulate", rows);
  return out;
}

inline ExperimentOutput cmd_fit(const ExperimentSpec& s) {
  validate(s);
  std::vector<double> data;
  if (!s.samples.empty()) {
    try {
      data = parse_sample_file(read_text_file(s.samples));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(s.samples + ": " + e.what());
    }
  } else {
    const auto summary = corpus_statistics(load_traces(s.trace));
    data = (s.fit_variable == "velocity") ? summary.velocities : summary.lengths;
  }
  const auto fits = rank_fits(data, kAllFamilies);
  ExperimentOutput out;
  std::ostringstream os;
  os << config_header(s);
  write_fit_report(os, fits);
  out.text = os.str();
  for (const auto& f : fits.failures) out.warnings.push_back(f.message);
  return out;
}

/// Pooled per-transition samples; summary statistics go to the warnings.
inline ExperimentOutput cmd_ingest(const ExperimentSpec& s) {
  validate(s);
  const auto traces = load_traces(s.trace);
  const auto summary = corpus_statistics(traces);
  ExperimentOutput out;
  std::ostringstream os;
  os << config_header(s);
  os << "trip_id,transition,length_m,velocity_mps,bearing_rad\n";
  for (std::size_t i = 0; i < traces.size(); ++i)
    for (std::size_t m = 0; m < summary.sample_trips[i].size(); ++m) {
      const auto& t = summary.sample_trips[i][m];
      os << traces[i].trip_id << ',' << m << ',' << format_number(t.length) << ',' << format_number(t.velocity) << ','
         << (t.bearing ? format_number(*t.bearing) : "") << '\n';
    }
  out.text = os.str();
  out.warnings = summary.warnings;
  out.warnings.push_back("trips=" + std::to_string(summary.trips) + " transitions=" +
                         std::to_string(summary.transitions) + " mean_length_m=" + format_number(summary.mean_length) +
                         " median_length_m=" + format_number(summary.median_length) +
                         " mean_velocity_mps=" + format_number(summary.mean_velocity));
  return out;
}

/// Proposed (RWP+ preset), literature (matched waypoint density, uniform
/// velocity over the mixture's mean range) and replay (trace corpus) series.
inline ExperimentOutput cmd_compare(const ExperimentSpec& s) {
  validate(s);
  ExperimentOutput out;
  const SimConfig base = sim_config(s);
  const auto& rwp = std::get<RwpPlusProfile>(base.profile);

  std::vector<std::pair<std::string, std::vector<SweepRow>>> series;
  series.emplace_back("proposed", sweep_lambda(base, s.lambda_grid));

  SimConfig lit = base;
  lit.profile = LiteratureProfile::matched_to(rwp.length, rwp.mix);
  series.emplace_back("literature", sweep_lambda(lit, s.lambda_grid));

  if (s.trace.empty()) {
    out.warnings.push_back("no trace corpus given; replay series omitted");
  } else {
    SimConfig rep = base;
    rep.profile = ReplayProfile{corpus_statistics(load_traces(s.trace)).sample_trips};
    series.emplace_back("replay", sweep_lambda(rep, s.lambda_grid));
  }

  std::ostringstream os;
  os << config_header(s);
  os << "series,lambda_per_km2,empirical_rate,theory_rate,stderr,n_realizations\n";
  for (const auto& [name, rows] : series) {
    for (const auto& r : rows)
      os << name << ',' << format_number(r.lambda_per_km2) << ',' << format_number(r.empirical_rate) << ','
         << format_number(r.theory_rate) << ',' << format_number(r.stderr_rate) << ',' << r.realizations << '\n';
    detail::exit_warnings(out, name, rows);
  }
  out.text = os.str();
  return out;
}

inline ExperimentOutput run_experiment(const ExperimentSpec& s) {
  if (s.command == "theory") return cmd_theory(s);
  if (s.command == "simulate") return cmd_simulate(s);
  if (s.command == "fit") return cmd_fit(s);
  if (s.command == "ingest") return cmd_ingest(s);
  if (s.command == "compare") return cmd_compare(s);
  throw std::invalid_argument("unknown command '" + s.command + "'");
}

} // namespace rwpp
