#include "mrflp/harness.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <random>

using namespace mrflp;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << content;
  return path;
}

Scenario tiny_scenario() {
  Scenario s = preset_scenario("baseline");
  s.model.nx = s.model.ny = 12;
  s.model.horizon = 3;
  s.replicates = 2;
  MethodSpec m = mrflp_method(1);
  m.knots = {10, 10};
  m.ranks = {5, 5};
  m.branching = {2};
  s.methods = {s.methods[0], m};
  return s;
}

}  // namespace

TEST(Mspe, Examples) {
  const std::vector<VectorXd> truth{VectorXd::LinSpaced(5, 0, 1), VectorXd::Ones(5)};
  EXPECT_EQ(mspe(truth, truth).total, 0.0);
  std::vector<VectorXd> shifted = truth;
  for (auto& v : shifted) v.array() += 0.3;
  EXPECT_NEAR(mspe(shifted, truth).total, 0.09, 1e-15);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  std::vector<VectorXd> est = truth;
  for (auto& v : est)
    for (Index i = 0; i < v.size(); ++i) v[i] += z(rng);
  double loop = 0;
  for (std::size_t t = 0; t < 2; ++t) {
    double s = 0;
    for (Index i = 0; i < 5; ++i) s += (est[t][i] - truth[t][i]) * (est[t][i] - truth[t][i]);
    loop += s / 5;
  }
  EXPECT_NEAR(mspe(est, truth).total, loop / 2, 1e-12);
  EXPECT_THROW(mspe({VectorXd::Ones(2)}, truth), Error);
}

TEST(Presets, AllLoadAndRoundTrip) {
  for (const auto& name : preset_names()) {
    const Scenario s = preset_scenario(name);
    EXPECT_EQ(s.name, name);
    const Scenario back = scenario_from_json(scenario_to_json(s));
    EXPECT_EQ(scenario_to_json(back), scenario_to_json(s)) << name;
  }
  EXPECT_THROW(preset_scenario("nope"), Error);
  EXPECT_EQ(preset_scenario("small-sample").model.observed_fraction, 0.1);
  EXPECT_EQ(preset_scenario("low-noise").model.obs.tau2, 0.02);
  EXPECT_EQ(preset_scenario("scaling").model.dynamics.kind, "scaled-identity");
}

TEST(Presets, JsonOverridesAndErrors) {
  const Scenario s = scenario_from_json(R"({"preset": "poisson", "replicates": 3,
      "methods": [{"kind": "dense-laplace"}, {"kind": "mrflp", "levels": 2, "ranks": 8}]})");
  EXPECT_EQ(s.model.obs.family, ObsFamily::Poisson);
  EXPECT_EQ(s.replicates, 3);
  ASSERT_EQ(s.methods.size(), 2u);
  EXPECT_EQ(s.methods[1].ranks, (std::vector<int>{8, 8, 8}));
  EXPECT_EQ(s.reference, "dense-laplace");
  EXPECT_THROW(scenario_from_json("{"), Error);
  EXPECT_THROW(scenario_from_json(R"({"methods": [{"kind": "magic"}]})"), Error);
  EXPECT_THROW(scenario_from_json(R"({"methods": [{"kind": "exact"}], "reference": "other"})"), Error);
}

TEST(Simulation, SizesAndDeterminism) {
  StateSpaceModel m = build_model(tiny_scenario().model);
  const Simulation a = simulate_truth(m, 0.3, 3, 5), b = simulate_truth(m, 0.3, 3, 5);
  ASSERT_EQ(a.states.size(), 3u);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(a.data[t].size(), 43);
    EXPECT_TRUE(std::is_sorted(a.data[t].sites.begin(), a.data[t].sites.end()));
    EXPECT_EQ(a.states[t], b.states[t]);
    EXPECT_EQ(a.data[t].values, b.data[t].values);
  }
}

TEST(Scenario, SameMethodTwiceGivesUnitRatios) {
  Scenario s = tiny_scenario();
  s.methods = {s.methods[0], s.methods[0]};
  s.methods[1].label = "exact-again";
  const MetricsTable t = run_scenario(s);
  for (const auto& m : t.methods) {
    EXPECT_EQ(m.ratio, 1.0);
    for (double r : m.per_time_ratio) EXPECT_EQ(r, 1.0);
  }
}

TEST(Scenario, ReproducibleAndThreadIndependent) {
  const Scenario s = tiny_scenario();
  const MetricsTable a = run_scenario(s), b = run_scenario(s, {2, false});
  for (std::size_t k = 0; k < a.methods.size(); ++k) {
    EXPECT_EQ(a.methods[k].per_time_mspe, b.methods[k].per_time_mspe);
    EXPECT_EQ(a.methods[k].total_mspe, b.methods[k].total_mspe);
  }
  EXPECT_EQ(a.at("exact").ratio, 1.0);
  EXPECT_GE(a.at("mrflp-M1").ratio, 1.0);
  EXPECT_FALSE(a.any_failure());
}

TEST(Scenario, FailuresAreRecordedPerReplicate) {
  Scenario s = tiny_scenario();
  s.methods[1].knots = {200, 200};  // more knots than points
  const MetricsTable t = run_scenario(s);
  EXPECT_TRUE(t.any_failure());
  EXPECT_EQ(t.at("mrflp-M1").failures, 2);
  EXPECT_EQ(t.at("exact").failures, 0);
}

TEST(Scenario, MetricsCsvCarriesProvenance) {
  const MetricsTable t = run_scenario(tiny_scenario());
  const std::string dir = ::testing::TempDir() + "metrics_out";
  write_metrics_csv(t, dir);
  std::ifstream in(dir + "/metrics_summary.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# seed=1, version=", 0), 0u) << line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("method,total_mspe,ratio", 0), 0u);
}

TEST(GridCsv, EmptyAndSingleRow) {
  EXPECT_TRUE(ingest_grid_csv(temp_file("empty.csv", "t,lat_index,lon_index,value\n"), 10, 10).empty());
  const auto one = ingest_grid_csv(temp_file("one.csv", "t,lat_index,lon_index,value\n1,3,4,2.5\n"), 10, 10);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].sites, (std::vector<Index>{34}));
  EXPECT_EQ(one[0].values[0], 2.5);
}

TEST(GridCsv, SortsAndFillsGaps) {
  const auto d = ingest_grid_csv(temp_file("gaps.csv", "# c\nt,lat_index,lon_index,value\n3,1,1,1\n3,0,2,2\n"), 4, 4);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_TRUE(d[0].empty());
  EXPECT_EQ(d[2].sites, (std::vector<Index>{2, 5}));
  EXPECT_EQ(d[2].values[0], 2.0);
}

TEST(GridCsv, ErrorsCarryLineNumbers) {
  auto message = [](const std::string& body) {
    try {
      ingest_grid_csv(temp_file("bad.csv", body), 4, 4);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("t,lat_index,lon_index,value\n1,0,0,1\n1,0,x,2\n").find(":3:"), std::string::npos);
  EXPECT_NE(message("t,lat_index,lon_index,value\n1,0,0,1\n1,0,0,2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(message("t,lat_index,lon_index,value\n1,9,0,1\n").find(":2:"), std::string::npos);
  EXPECT_NE(message("time,a,b\n").find(":1:"), std::string::npos);
}

TEST(GridCsv, RoundTrip) {
  StateSpaceModel m = build_model(tiny_scenario().model);
  const Simulation sim = simulate_truth(m, 0.3, 3, 8);
  const std::string path = ::testing::TempDir() + "round.csv";
  write_grid_csv(path, sim.data, 12, 8);
  const auto back = ingest_grid_csv(path, 12, 12);
  ASSERT_EQ(back.size(), sim.data.size());
  for (std::size_t t = 0; t < back.size(); ++t) {
    EXPECT_EQ(back[t].sites, sim.data[t].sites);
    EXPECT_EQ(back[t].values, sim.data[t].values);
  }
}

TEST(Hyperparameters, SplitAndRecovery) {
  const GridSpec grid = GridSpec::regular_square(20, 20);
  std::mt19937_64 rng(3);
  const MatrixXd l = cov_cholesky(grid.points, {CovFamily::Exponential, 1.0, 0.15}, 0.05);
  std::normal_distribution<double> z;
  std::vector<ObservationSet> data(3);
  for (auto& o : data) {
    VectorXd e(400);
    for (Index i = 0; i < 400; ++i) e[i] = z(rng);
    const VectorXd f = l * e;
    for (Index i = 0; i < 400; i += 2) o.sites.push_back(i);
    o.values.resize(200);
    for (Index k = 0; k < 200; ++k) o.values[k] = f[o.sites[static_cast<std::size_t>(k)]] + 2.0;
  }
  const HyperParameters h = fit_real_data_hyperparameters(grid, data, CovFamily::Exponential);
  EXPECT_EQ(h.times_used, 3);
  EXPECT_EQ(h.sigma0_2, 9.0 * h.sigma_w2);
  EXPECT_NEAR(h.range, 0.15, 0.1);
  EXPECT_NEAR(10.0 * h.sigma_w2, 1.0, 0.6);

  const HyperParameters one = fit_real_data_hyperparameters(grid, {data[0]}, CovFamily::Exponential);
  const VectorXd y = data[0].values.array() - data[0].values.mean();
  std::vector<Point2> pts;
  for (Index s : data[0].sites) pts.push_back(grid.points[static_cast<std::size_t>(s)]);
  const SpatialFit f = fit_spatial_mle(pts, y, CovFamily::Exponential);
  EXPECT_EQ(one.range, f.range);
  EXPECT_EQ(one.sigma_v2, f.nugget_variance);

  EXPECT_THROW(fit_real_data_hyperparameters(grid, {ObservationSet{}}, CovFamily::Exponential), Error);
}

TEST(FactorBinary, RoundTripAndMismatch) {
  const auto grid = GridSpec::regular_square(12, 12);
  const auto part = build_partition(grid, PartitionConfig::uniform(2, 2, 8, 4, 1));
  const KernelCovSource src(part->ordered_points(), {CovFamily::Exponential, 1.0, 0.15});
  const BlockFactor b = decompose(src, part).factor;
  const std::string path = ::testing::TempDir() + "factor.bin";
  write_factor_binary(path, b);
  const BlockFactor back = read_factor_binary(path, part);
  EXPECT_EQ(back.to_dense(), b.to_dense());
  const auto other = build_partition(grid, PartitionConfig::uniform(2, 2, 8, 3, 1));
  EXPECT_THROW(read_factor_binary(path, other), Error);
  EXPECT_THROW(read_factor_binary(temp_file("junk.bin", "hello"), part), Error);
}

TEST(Seeds, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}
