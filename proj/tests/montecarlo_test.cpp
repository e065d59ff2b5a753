#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "rwpp/montecarlo.hpp"

using namespace rwpp;

namespace {

SimConfig preset_config(const char* name, double lambda_per_km2, double pause = 0.0) {
  SimConfig cfg;
  cfg.profile = RwpPlusProfile::from_preset(find_preset(name));
  cfg.lambda = lambda_per_km2 * 1e-6;
  cfg.pause = pause;
  return cfg;
}

double combined_se(const HandoffStats& a, const HandoffStats& b) {
  return std::hypot(rate_standard_error(a), rate_standard_error(b));
}

} // namespace

TEST(EmpiricalRate, Arithmetic) {
  HandoffStats s;
  s.total_handoffs = 100;
  s.total_travel_time = 1000.0;
  EXPECT_DOUBLE_EQ(empirical_rate(s), 0.1);
  s.total_pause_time = 50.0;
  EXPECT_LT(empirical_rate(s), 0.1);
  HandoffStats empty;
  EXPECT_THROW(empirical_rate(empty), std::domain_error);
}

TEST(SimConfig, Validation) {
  SimConfig cfg;
  cfg.realizations = 0;
  EXPECT_THROW(run_simulation(cfg), std::invalid_argument);
  cfg = {};
  cfg.lambda = 0.0;
  EXPECT_THROW(run_simulation(cfg), std::invalid_argument);
  cfg = {};
  cfg.profile = ReplayProfile{};
  EXPECT_THROW(run_simulation(cfg), std::invalid_argument);
}

TEST(RunSimulation, NearlyEmptyNetworkHasNoHandoffs) {
  SimConfig cfg = preset_config("manhattan", 1e-4);
  cfg.realizations = 100;
  const auto s = run_simulation(cfg);
  EXPECT_EQ(s.total_handoffs, 0u);
  EXPECT_GT(s.total_travel_time, 0.0);
}

TEST(RunSimulation, DeterministicAcrossThreadCounts) {
  SimConfig cfg = preset_config("toronto", 2.0, 5.0);
  cfg.realizations = 60;
  cfg.seed = 77;
  const auto one = run_simulation(cfg);
  cfg.threads = 3;
  const auto three = run_simulation(cfg);
  cfg.threads = 8;
  const auto eight = run_simulation(cfg);
  EXPECT_EQ(one, three);
  EXPECT_EQ(one, eight);
  cfg.seed = 78;
  EXPECT_NE(one.total_handoffs, run_simulation(cfg).total_handoffs);
}

TEST(RunSimulation, RecordsAddUp) {
  SimConfig cfg = preset_config("rome", 1.0, 5.0);
  cfg.realizations = 40;
  const auto s = run_simulation(cfg);
  ASSERT_EQ(s.records.size(), 40u);
  std::uint64_t n = 0;
  for (const auto& r : s.records) {
    n += r.handoffs;
    EXPECT_EQ(r.transitions, 10u);
    EXPECT_DOUBLE_EQ(r.pause_time, 50.0);
  }
  EXPECT_EQ(n, s.total_handoffs);
  EXPECT_DOUBLE_EQ(s.total_pause_time, 2000.0);
}

TEST(RunSimulation, ManhattanAgreesWithTheory) {
  for (double l : {0.5, 1.0, 2.0, 4.0}) {
    const SimConfig cfg = preset_config("manhattan", l);
    const auto s = run_simulation(cfg);
    EXPECT_NEAR(empirical_rate(s) / theory_rate(cfg), 1.0, 0.05) << l;
  }
}

TEST(RunSimulation, RomeWithPauseAgreesWithTheory) {
  for (double l : {0.5, 2.0}) {
    const SimConfig cfg = preset_config("rome", l, 5.0);
    const auto s = run_simulation(cfg);
    EXPECT_NEAR(empirical_rate(s) / theory_rate(cfg), 1.0, 0.05) << l;
  }
}

TEST(RunSimulation, StandardErrorHalvesWithFourTimesRealizations) {
  double small = 0.0, large = 0.0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    SimConfig cfg = preset_config("manhattan", 1.0);
    cfg.topology = Topology::Torus;
    cfg.region_side = 20'000;
    cfg.seed = seed;
    cfg.realizations = 100;
    small += rate_standard_error(run_simulation(cfg));
    cfg.seed = seed + 1000;
    cfg.realizations = 400;
    large += rate_standard_error(run_simulation(cfg));
  }
  EXPECT_NEAR(small / large, 2.0, 0.4);
}

TEST(RunSimulation, LengthFirstFollowsInverseVelocityOracle) {
  SimConfig cfg = preset_config("toronto", 1.0);
  cfg.mode = TripMode::LengthFirst;
  cfg.topology = Topology::Torus;
  const auto s = run_simulation(cfg);
  const double oracle_rate = oracle::rate_length_first(find_preset("toronto"), cfg.lambda);
  EXPECT_NEAR(empirical_rate(s) / oracle_rate, 1.0, 0.05);
  // The gap to the duration-first closed form is well outside the noise.
  EXPECT_LT(empirical_rate(s) / theory_rate(cfg), 0.88);
}

TEST(RunSimulation, BearingIrrelevantUnderPoissonDeployment) {
  SimConfig cfg = preset_config("manhattan", 2.0);
  cfg.topology = Topology::Torus;
  const auto uniform = run_simulation(cfg);
  const double th = theory_rate(cfg);
  cfg.bearing = BearingModel::normal(1.0, 0.2);
  cfg.seed = 2;
  const auto normal = run_simulation(cfg);
  EXPECT_EQ(theory_rate(cfg), th);
  EXPECT_LT(std::abs(empirical_rate(uniform) - empirical_rate(normal)), 3.0 * combined_se(uniform, normal));
}

TEST(RunSimulation, LiteratureProfileDiffersFromProposed) {
  const auto& p = find_preset("manhattan");
  SimConfig cfg = preset_config("manhattan", 1.0);
  cfg.topology = Topology::Torus;
  const auto proposed = run_simulation(cfg);
  cfg.profile = LiteratureProfile::matched_to(p.length, p.velocity);
  EXPECT_TRUE(std::isnan(theory_rate(cfg)));
  const auto lit = run_simulation(cfg);
  EXPECT_GT(std::abs(empirical_rate(proposed) - empirical_rate(lit)), 3.0 * combined_se(proposed, lit));
  const auto& l = std::get<LiteratureProfile>(cfg.profile);
  EXPECT_NEAR(1.0 / (2.0 * std::sqrt(l.lambda_wp)), p.length.mean_length(), 1e-9);
  EXPECT_EQ(l.v_min, 4.5);
  EXPECT_EQ(l.v_max, 25.0);
}

TEST(ReplayTrips, SelfGeneratedCorpusMatchesSimulation) {
  const auto& p = find_preset("manhattan");
  const TripGenerator gen(p.length, p.velocity, BearingModel::uniform(), 0.0, TripMode::DurationFirst);
  Rng rng(601);
  std::vector<SampleTrip> corpus;
  for (int k = 0; k < 400; ++k) {
    SampleTrip trip;
    for (const auto& t : gen.generate({0, 0}, 10, rng).transitions) trip.push_back({t.length(), t.velocity, std::nullopt});
    corpus.push_back(std::move(trip));
  }
  SimConfig cfg = preset_config("manhattan", 1.0);
  cfg.topology = Topology::Torus;
  const auto sim = run_simulation(cfg);
  cfg.seed = 9;
  const auto rep = replay_trips(corpus, cfg);
  EXPECT_LT(std::abs(empirical_rate(sim) - empirical_rate(rep)), 3.0 * combined_se(sim, rep));
  EXPECT_THROW(replay_trips({}, cfg), std::invalid_argument);
}

TEST(ReplayTrips, ReplayedTransitionCrossesOneBisector) {
  const TransitionSample t{1000.0, 10.0, std::numbers::pi / 2};
  const Deployment d(1e-6, Region::centered_square(4000), {{-300, 0}, {300, 0}});
  const Point start{-500, 10};
  EXPECT_EQ(count_handoffs(start, start + displacement(t.length, *t.bearing), d), 1u);
}

TEST(ReplayTrips, KeepsRecordedBearings) {
  // A corpus heading due east forever leaves a planar region; exits are counted.
  std::vector<SampleTrip> corpus{SampleTrip(10, TransitionSample{3000.0, 10.0, std::numbers::pi / 2})};
  SimConfig cfg = preset_config("manhattan", 1.0);
  cfg.realizations = 5;
  const auto s = replay_trips(corpus, cfg);
  EXPECT_EQ(s.boundary_exits, 5u);
}

TEST(Sweep, CsvLayoutAndSeeds) {
  SimConfig cfg = preset_config("rome", 1.0);
  cfg.realizations = 20;
  const std::vector<double> grid{1.0, 2.0};
  const auto rows = sweep_lambda(cfg, grid);
  ASSERT_EQ(rows.size(), 2u);
  std::ostringstream os;
  write_sweep_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "lambda_per_km2,empirical_rate,theory_rate,stderr,n_realizations");
  EXPECT_NE(sweep_seed(1, 0), sweep_seed(1, 1));
  EXPECT_THROW(sweep_lambda(cfg, std::vector<double>{}), std::invalid_argument);
  cfg.lambda = 2e-6;
  cfg.seed = sweep_seed(1, 1);
  EXPECT_EQ(empirical_rate(run_simulation(cfg)), rows[1].empirical_rate);
}
