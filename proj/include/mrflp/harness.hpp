#pragma once

#include "mrflp/filters.hpp"
#include "mrflp/mle.hpp"
#include "mrflp/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mrflp {

std::string_view library_version();

struct DynamicsSpec {
  std::string kind = "advection";  // advection | lorenz05 | scaled-identity | quadratic
  double alpha = 0.01;
  double beta = 0.0002;
  double dt = 0.5;
  double forcing = 0.5;
  double coefficient = 0.6;
};

struct ModelSpec {
  std::string geometry = "square";  // square | circle
  int nx = 34;
  int ny = 34;
  int circle_points = 1156;
  int horizon = 20;
  double observed_fraction = 0.3;
  double mu0 = 0.0;
  DynamicsSpec dynamics;
  CovarianceFunction sigma0{CovFamily::Exponential, 1.0, 0.15};
  CovarianceFunction q{CovFamily::Exponential, 0.1, 0.15};
  ObservationModel obs;
};

struct MethodSpec {
  std::string label;
  std::string kind;  // exact | mrf | mrflp | enkf | dense-laplace
  int levels = 0;
  std::vector<int> branching;
  std::vector<int> knots;
  std::vector<int> ranks;
  int members = 30;
  Index taper_nnz = 0;  // 0: use members
  TaperKind taper = TaperKind::Kanter;
  double epsilon = 1e-6;
};

struct Scenario {
  std::string name;
  ModelSpec model;
  std::vector<MethodSpec> methods;
  std::string reference;  // label of the reference method
  int replicates = 10;
  std::uint64_t seed = 1;
};

/// Named presets: baseline, small-sample, low-noise, smooth, gamma, poisson,
/// lorenz05, enkf-comparison, scaling.
Scenario preset_scenario(const std::string& name);
std::vector<std::string> preset_names();
Scenario load_scenario(const std::string& name_or_path);
Scenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& s);

/// Method settings used throughout: M = 2 or M = 4 with binary splits.
MethodSpec mrf_method(int levels);
MethodSpec mrflp_method(int levels);

GridSpec make_grid(const ModelSpec& spec);
DynamicsPtr make_dynamics(const ModelSpec& spec, const GridSpec& grid);
/// Model without data.
StateSpaceModel build_model(const ModelSpec& spec);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

struct Simulation {
  std::vector<VectorXd> states;  // states[t - 1] = x_t
  std::vector<ObservationSet> data;
};

/// x_0 ~ N(mu0, Sigma0), x_t = A(x_{t-1}) + w_t, observations at a fresh
/// uniformly drawn site subset of size round(fraction * n) each time.
Simulation simulate_truth(const StateSpaceModel& model, double observed_fraction, int horizon, std::uint64_t seed);

struct MspeSummary {
  std::vector<double> per_time;
  double total = 0.0;
};

MspeSummary mspe(const std::vector<VectorXd>& estimates, const std::vector<VectorXd>& truth);

PartitionPtr method_partition(const MethodSpec& m, const GridSpec& grid, std::uint64_t seed);
FilterResult run_method(const MethodSpec& m, const StateSpaceModel& model, std::uint64_t seed,
                        const FilterOptions& options = {});

struct MethodMetrics {
  std::string label;
  std::vector<double> per_time_mspe;  // averaged over successful replicates
  std::vector<double> per_time_ratio;
  double total_mspe = 0.0;
  double ratio = 0.0;
  double mean_time_ms = 0.0;
  double time_ratio = 0.0;
  double mean_newton_iterations = 0.0;
  int failures = 0;
  std::vector<std::string> errors;
};

struct MetricsTable {
  std::string scenario;
  std::string reference;
  std::uint64_t seed = 0;
  int replicates = 0;
  std::vector<MethodMetrics> methods;

  const MethodMetrics& at(const std::string& label) const;
  bool any_failure() const;
};

struct RunOptions {
  int threads = 1;
  bool verbose = false;
};

MetricsTable run_scenario(const Scenario& s, const RunOptions& options = {});

/// `# seed=..., version=...` line for CSV outputs.
std::string provenance_line(std::uint64_t seed);
void write_metrics_csv(const MetricsTable& m, const std::string& dir);

/// Grid CSV with header t,lat_index,lon_index,value (0-based indices, t >= 1,
/// flattened index lat * nx + lon). Absent cells are missing.
std::vector<ObservationSet> ingest_grid_csv(const std::string& path, int nx, int ny);
void write_grid_csv(const std::string& path, const std::vector<ObservationSet>& data, int nx, std::uint64_t seed);

struct HyperParameters {
  double range = 0.0;
  double sigma_w2 = 0.0;  // system noise variance
  double sigma_v2 = 0.0;  // measurement noise variance
  double sigma0_2 = 0.0;  // initial variance, 9 * sigma_w2
  int times_used = 0;
};

/// Per-time demeaned spatial MLE fits averaged over time; the averaged signal
/// variance is split 9:1 between the initial and the system covariance.
HyperParameters fit_real_data_hyperparameters(const GridSpec& grid, const std::vector<ObservationSet>& data,
                                              CovFamily family, const MleOptions& options = {});

/// Binary factor file: "MRFLPBF1\n", u64 header length, JSON header, then each
/// region block as column-major doubles in region order.
void write_factor_binary(const std::string& path, const BlockFactor& b);
BlockFactor read_factor_binary(const std::string& path, PartitionPtr partition);

}  // namespace mrflp
