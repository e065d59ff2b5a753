#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <unistd.h>

#include "rwpp/experiment.hpp"
#include "rwpp/trip_model.hpp"

using namespace rwpp;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

class TempDir {
public:
  TempDir() : path_(fs::temp_directory_path() / ("rwpp_test_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
  fs::path path_;
};

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

int run_cli(const std::string& args) { return std::system((std::string(RWPP_CLI_PATH) + " " + args).c_str()); }

ExperimentSpec small_simulation() {
  ExperimentSpec s;
  s.command = "simulate";
  s.realizations = 30;
  s.lambda_grid = {1.0, 2.0};
  return s;
}

std::string trace_corpus(std::size_t trips, std::uint64_t seed) {
  const auto& p = find_preset("manhattan");
  Rng rng(seed);
  std::vector<RouteTrace> traces;
  for (std::size_t k = 0; k < trips; ++k)
    traces.push_back(trip_to_trace(
        generate_trip({0, 0}, 10, p.length, p.velocity, {}, 0.0, TripMode::DurationFirst, rng), "t" + std::to_string(k),
        {40.75, -73.98}));
  return serialize_traces(traces);
}

} // namespace

TEST(Spec, JsonRoundTripAndUnknownKeys) {
  ExperimentSpec s;
  s.preset = "rome";
  s.lambda_grid = {0.1, 0.7};
  s.pause_s = 2.5;
  s.seed = 18446744073709551615ull;
  const auto back = parse_config_text(config_header(s));
  EXPECT_EQ(to_json(back), to_json(s));
  EXPECT_THROW(parse_config_text(R"({"presett":"rome"})"), std::invalid_argument);
  EXPECT_THROW(parse_config_text(R"({"realizations":"many"})"), std::invalid_argument);
  EXPECT_THROW(parse_config_text("[1,2]"), std::invalid_argument);
  EXPECT_THROW(parse_config_text(""), std::invalid_argument);
}

TEST(Spec, FlagParsers) {
  EXPECT_EQ(parse_lambda_grid("0.5, 1,2,4"), (std::vector<double>{0.5, 1, 2, 4}));
  EXPECT_TRUE(parse_lambda_grid("").empty());
  EXPECT_THROW(parse_lambda_grid("1,,2"), std::invalid_argument);
  EXPECT_EQ(parse_bearing("uniform"), BearingModel::uniform());
  EXPECT_EQ(parse_bearing("normal:1.5,0.25"), BearingModel::normal(1.5, 0.25));
  EXPECT_THROW(parse_bearing("normal:1"), std::invalid_argument);
  EXPECT_THROW(parse_mode("sideways"), std::invalid_argument);
  EXPECT_THROW(parse_topology("sphere"), std::invalid_argument);
}

TEST(CmdTheory, AllPresetsTenPoints) {
  ExperimentSpec s;
  s.command = "theory";
  s.preset = "all";
  s.lambda_grid = {0.1, 0.2, 0.3, 0.5, 0.8, 1, 1.5, 2, 3, 4};
  const auto out = lines(cmd_theory(s).text);
  ASSERT_EQ(out.size(), 42u);
  EXPECT_EQ(out[0].rfind("# {", 0), 0u);
  for (std::size_t i = 2; i < out.size(); ++i) {
    std::istringstream row(out[i]);
    std::string name, lam, h;
    std::getline(row, name, ',');
    std::getline(row, lam, ',');
    std::getline(row, h, ',');
    const double expect = 4 * std::sqrt(std::stod(lam) * 1e-6) * find_preset(name).velocity.mean() / std::numbers::pi;
    EXPECT_NEAR(std::stod(h) / expect, 1.0, 1e-12) << out[i];
  }
}

TEST(CmdTheory, Errors) {
  ExperimentSpec s;
  s.command = "theory";
  s.preset = "atlantis";
  try {
    cmd_theory(s);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("manhattan"), std::string::npos);
  }
  s.preset = "rome";
  s.lambda_grid = {};
  EXPECT_THROW(cmd_theory(s), std::invalid_argument);
}

TEST(CmdSimulate, SameSeedSameBytesAnyThreads) {
  auto s = small_simulation();
  const auto a = cmd_simulate(s).text;
  s.threads = 4;
  EXPECT_EQ(a, cmd_simulate(s).text);
  EXPECT_EQ(lines(a).size(), 4u);
  EXPECT_EQ(lines(a)[1], "lambda_per_km2,empirical_rate,theory_rate,stderr,n_realizations");
  s.realizations = 0;
  EXPECT_THROW(cmd_simulate(s), std::invalid_argument);
  s = small_simulation();
  s.preset = "rome,toronto";
  EXPECT_THROW(cmd_simulate(s), std::invalid_argument);
}

TEST(CmdSimulate, HeaderRerunReproducesOutput) {
  auto s = small_simulation();
  s.pause_s = 5;
  s.seed = 4242;
  s.bearing = "normal:0.5,1";
  s.mode = "length-first";
  const auto text = cmd_simulate(s).text;
  EXPECT_EQ(run_experiment(parse_config_text(text)).text, text);
}

TEST(CmdFit, SamplesFileNineRows) {
  TempDir dir;
  Rng rng(701);
  std::string body = "# synthetic lognormal\n";
  for (int i = 0; i < 3000; ++i) body += std::to_string(std::exp(5.98 + 1.01 * standard_normal(rng))) + "\n";
  write(dir.file("x.txt"), body);
  ExperimentSpec s;
  s.command = "fit";
  s.samples = dir.file("x.txt");
  const auto out = lines(cmd_fit(s).text);
  ASSERT_EQ(out.size(), 11u);
  EXPECT_EQ(out[1], "family,params,ci_lo,ci_hi,rmse,rank");
  EXPECT_EQ(out[2].rfind("lognormal,", 0), 0u);

  s.samples = dir.file("missing.txt");
  EXPECT_THROW(cmd_fit(s), std::runtime_error);
  write(dir.file("bad.txt"), "1\n2\nabc\n");
  s.samples = dir.file("bad.txt");
  try {
    cmd_fit(s);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(CmdFit, TraceFileAndParseErrors) {
  TempDir dir;
  write(dir.file("t.jsonl"), trace_corpus(50, 702));
  ExperimentSpec s;
  s.command = "fit";
  s.trace = dir.file("t.jsonl");
  EXPECT_EQ(lines(cmd_fit(s).text).size(), 11u);
  write(dir.file("bad.jsonl"), R"({"trip_id":"z","transitions":[{"sub_segments":[{"length_m":0,"velocity_mps":1}]}]})");
  s.trace = dir.file("bad.jsonl");
  try {
    cmd_fit(s);
    FAIL();
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("trip 'z'"), std::string::npos);
    EXPECT_NE(msg.find("transition 0"), std::string::npos);
  }
  s.samples = "also.txt";
  EXPECT_THROW(cmd_fit(s), std::invalid_argument);
}

TEST(CmdIngest, PooledSamples) {
  TempDir dir;
  write(dir.file("t.jsonl"), trace_corpus(3, 703));
  ExperimentSpec s;
  s.command = "ingest";
  s.trace = dir.file("t.jsonl");
  const auto out = cmd_ingest(s);
  EXPECT_EQ(lines(out.text).size(), 32u);
  EXPECT_NE(out.warnings.back().find("transitions=30"), std::string::npos);
}

TEST(CmdCompare, SeriesAndReplayWarning) {
  ExperimentSpec s;
  s.command = "compare";
  s.realizations = 30;
  s.lambda_grid = {1.0, 2.0};
  const auto out = cmd_compare(s);
  const auto rows = lines(out.text);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[1], "series,lambda_per_km2,empirical_rate,theory_rate,stderr,n_realizations");
  EXPECT_EQ(rows[2].rfind("proposed,", 0), 0u);
  EXPECT_EQ(rows[4].rfind("literature,", 0), 0u);
  ASSERT_FALSE(out.warnings.empty());
  EXPECT_NE(out.warnings.front().find("replay"), std::string::npos);

  // The proposed rows carry the same numbers as simulate.
  auto sim = s;
  sim.command = "simulate";
  const auto simrows = lines(cmd_simulate(sim).text);
  EXPECT_EQ("proposed," + simrows[2], rows[2]);
  EXPECT_EQ("proposed," + simrows[3], rows[3]);
}

TEST(CmdCompare, ReplaySeriesTracksProposed) {
  TempDir dir;
  write(dir.file("t.jsonl"), trace_corpus(400, 704));
  ExperimentSpec s;
  s.command = "compare";
  s.realizations = 400;
  s.lambda_grid = {1.0};
  s.topology = "torus";
  s.trace = dir.file("t.jsonl");
  const auto rows = lines(cmd_compare(s).text);
  ASSERT_EQ(rows.size(), 5u);
  auto field = [](const std::string& row, int k) {
    std::istringstream is(row);
    std::string f;
    for (int i = 0; i <= k; ++i) std::getline(is, f, ',');
    return std::stod(f);
  };
  EXPECT_EQ(rows[4].rfind("replay,", 0), 0u);
  const double diff = std::abs(field(rows[2], 2) - field(rows[4], 2));
  EXPECT_LT(diff, 3.0 * std::hypot(field(rows[2], 4), field(rows[4], 4)));
}

TEST(Cli, ConfigRerunIsByteIdentical) {
  TempDir dir;
  const std::string a = dir.file("a.csv"), b = dir.file("b.csv"), c = dir.file("c.csv");
  ASSERT_EQ(run_cli("simulate --preset rome --lambda-grid 1,2 --realizations 25 --pause-s 5 --seed 9 --out " + a), 0);
  ASSERT_EQ(run_cli("--config " + a + " --threads 3 --out " + b), 0);
  ASSERT_EQ(run_cli("simulate --config " + a + " --out " + c), 0);
  const auto ta = read_text_file(a);
  EXPECT_EQ(ta, read_text_file(b));
  EXPECT_EQ(ta, read_text_file(c));
  EXPECT_NE(ta.find("\"seed\":9"), std::string::npos);
}

TEST(Cli, ErrorsExitNonZero) {
  TempDir dir;
  const std::string quiet = " 2>" + dir.file("err.txt");
  EXPECT_NE(run_cli("theory --preset nowhere" + quiet), 0);
  EXPECT_NE(run_cli("simulate --realizations 0" + quiet), 0);
  EXPECT_NE(run_cli("theory --lambda-grid ''" + quiet), 0);
  EXPECT_NE(run_cli("fit --samples " + dir.file("nope.txt") + quiet), 0);
  write(dir.file("cfg.json"), R"({"command":"theory","colour":"red"})");
  EXPECT_NE(run_cli("--config " + dir.file("cfg.json") + quiet), 0);
  EXPECT_NE(read_text_file(dir.file("err.txt")).find("colour"), std::string::npos);
}
