// Batch front end: theory, simulate, fit, ingest, compare.

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "rwpp/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::string preset;
  std::string lambda_grid;
  double pause_s = 0.0;
  std::size_t realizations = 0;
  double region_km = 0.0;
  std::size_t transitions = 0;
  std::uint64_t seed = 0;
  std::string mode;
  std::string bearing;
  std::string topology;
  std::string trace;
  std::string samples;
  std::string fit_variable;
  unsigned threads = 1;
  std::string out;
};

// Registers the shared flags on a subcommand and returns the options by name.
std::map<std::string, CLI::Option*> add_flags(CLI::App& app, Flags& f) {
  std::map<std::string, CLI::Option*> o;
  o["config"] = app.add_option("--config", f.config, "JSON config or a previous output with its header line");
  o["preset"] = app.add_option("--preset", f.preset, "city preset, comma list, or 'all' (theory)");
  o["lambda_grid"] = app.add_option("--lambda-grid", f.lambda_grid, "comma list of base-station densities per km^2");
  o["pause_s"] = app.add_option("--pause-s", f.pause_s, "pause per waypoint in seconds");
  o["realizations"] = app.add_option("--realizations", f.realizations, "network realizations per lambda");
  o["region_km"] = app.add_option("--region-km", f.region_km, "side of the square region in km");
  o["transitions"] = app.add_option("--transitions", f.transitions, "transitions per trip");
  o["seed"] = app.add_option("--seed", f.seed, "master seed");
  o["mode"] = app.add_option("--mode", f.mode, "length-first | duration-first");
  o["bearing"] = app.add_option("--bearing", f.bearing, "uniform | normal:<mean>,<std> (radians)");
  o["topology"] = app.add_option("--topology", f.topology, "planar | torus");
  o["trace"] = app.add_option("--trace", f.trace, "route trace file (JSON lines)");
  o["samples"] = app.add_option("--samples", f.samples, "plain sample file for fit, one value per line");
  o["fit_variable"] = app.add_option("--fit-variable", f.fit_variable, "length | velocity");
  o["threads"] = app.add_option("--threads", f.threads, "worker threads (does not change results)");
  o["out"] = app.add_option("--out", f.out, "output path (default stdout)");
  return o;
}

rwpp::ExperimentSpec resolve(const std::string& command, const Flags& f,
                             const std::map<std::string, CLI::Option*>& o) {
  rwpp::ExperimentSpec s;
  if (o.at("config")->count() > 0) {
    s = rwpp::parse_config_text(rwpp::read_text_file(f.config));
    if (!command.empty() && s.command != command)
      throw std::invalid_argument("config is for '" + s.command + "', not '" + command + "'");
  }
  if (!command.empty()) s.command = command;
  auto given = [&](const char* k) { return o.at(k)->count() > 0; };
  if (given("preset")) s.preset = f.preset;
  if (given("lambda_grid")) s.lambda_grid = rwpp::parse_lambda_grid(f.lambda_grid);
  if (given("pause_s")) s.pause_s = f.pause_s;
  if (given("realizations")) s.realizations = f.realizations;
  if (given("region_km")) s.region_km = f.region_km;
  if (given("transitions")) s.transitions = f.transitions;
  if (given("seed")) s.seed = f.seed;
  if (given("mode")) s.mode = f.mode;
  if (given("bearing")) s.bearing = f.bearing;
  if (given("topology")) s.topology = f.topology;
  if (given("trace")) s.trace = f.trace;
  if (given("samples")) s.samples = f.samples;
  if (given("fit_variable")) s.fit_variable = f.fit_variable;
  s.threads = f.threads;
  s.out = f.out;
  return s;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"RWP+ mobility model: handoff-rate theory, simulation and distribution fitting"};
  app.require_subcommand(0, 1);

  Flags top;
  auto top_opts = add_flags(app, top);

  std::map<std::string, std::pair<Flags, std::map<std::string, CLI::Option*>>> subs;
  const std::map<std::string, std::string> help{
      {"theory", "closed-form handoff rate per preset and lambda"},
      {"simulate", "Monte Carlo handoff rate against theory"},
      {"fit", "fit and rank the nine length distributions"},
      {"ingest", "reduce route traces to per-transition samples"},
      {"compare", "proposed vs literature vs replay rates"},
  };
  for (const auto& name : rwpp::experiment_commands()) {
    auto* sub = app.add_subcommand(name, help.at(name));
    auto& entry = subs[name];
    entry.second = add_flags(*sub, entry.first);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    rwpp::ExperimentSpec spec;
    if (app.get_subcommands().empty()) {
      if (top_opts.at("config")->count() == 0) {
        std::cerr << app.help();
        return 2;
      }
      spec = resolve("", top, top_opts);
    } else {
      const std::string name = app.get_subcommands().front()->get_name();
      auto& [flags, opts] = subs.at(name);
      spec = resolve(name, flags, opts);
    }

    const auto result = rwpp::run_experiment(spec);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    if (spec.out.empty()) {
      std::cout << result.text;
    } else {
      std::ofstream os(spec.out, std::ios::binary);
      if (!os) throw std::runtime_error("cannot write '" + spec.out + "'");
      os << result.text;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
