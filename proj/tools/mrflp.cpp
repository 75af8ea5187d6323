#include "mrflp/harness.hpp"
#include "mrflp/kernels.hpp"
#include "mrflp/mralp.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace mrflp;

namespace {

void write_truth_csv(const std::string& path, const std::vector<VectorXd>& states, std::uint64_t seed) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os.precision(17);
  os << provenance_line(seed) << "\n" << "t,grid_index,value\n";
  for (std::size_t t = 0; t < states.size(); ++t)
    for (Index i = 0; i < states[t].size(); ++i) os << t + 1 << "," << i << "," << states[t][i] << "\n";
}

int grid_nx(const ModelSpec& m) { return m.geometry == "circle" ? m.circle_points : m.nx; }
int grid_ny(const ModelSpec& m) { return m.geometry == "circle" ? 1 : m.ny; }

void print_table(const MetricsTable& t) {
  std::cout << "scenario " << t.scenario << " (" << t.replicates << " replicates, reference " << t.reference
            << ")\n";
  for (const auto& m : t.methods) {
    std::cout << "  " << m.label << ": mspe " << m.total_mspe << ", ratio " << m.ratio << ", time "
              << m.mean_time_ms << " ms, time ratio " << m.time_ratio;
    if (m.failures > 0) std::cout << ", " << m.failures << " failed";
    std::cout << "\n";
    for (const auto& e : m.errors) std::cerr << "    " << e << "\n";
  }
}

const MethodSpec& multires_method(const Scenario& s, const std::string& label) {
  for (const auto& m : s.methods)
    if ((label.empty() && (m.kind == "mrf" || m.kind == "mrflp")) || m.label == label) return m;
  throw Error(label.empty() ? "config has no mrf or mrflp method" : "no method labelled '" + label + "'");
}

int cmd_simulate(const std::string& scenario, const std::string& out, int replicates, int threads, long long seed,
                 bool verbose, bool print_config) {
  Scenario s = load_scenario(scenario);
  if (replicates > 0) s.replicates = replicates;
  if (seed >= 0) s.seed = static_cast<std::uint64_t>(seed);
  if (print_config) {
    std::cout << scenario_to_json(s) << "\n";
    return 0;
  }
  std::filesystem::create_directories(out);
  std::ofstream(out + "/scenario.json") << scenario_to_json(s) << "\n";

  StateSpaceModel model = build_model(s.model);
  const Simulation sim = simulate_truth(model, s.model.observed_fraction, s.model.horizon,
                                        derive_seed(derive_seed(s.seed, 0), 0));
  write_truth_csv(out + "/truth.csv", sim.states, s.seed);
  write_grid_csv(out + "/observations.csv", sim.data, grid_nx(s.model), s.seed);

  const MetricsTable table = run_scenario(s, {threads, verbose});
  write_metrics_csv(table, out);
  print_table(table);
  return table.any_failure() ? 1 : 0;
}

int cmd_filter(const std::string& config, const std::string& data, const std::string& out,
               const std::string& label) {
  const Scenario s = load_scenario(config);
  StateSpaceModel model = build_model(s.model);
  model.data = ingest_grid_csv(data, grid_nx(s.model), grid_ny(s.model));
  const MethodSpec* method = &s.methods.front();
  if (!label.empty()) method = &multires_method(s, label);
  const FilterResult r = run_method(*method, model, s.seed);

  std::filesystem::create_directories(out);
  std::ofstream means(out + "/means.csv");
  means.precision(17);
  means << provenance_line(s.seed) << "\n" << "t,grid_index,mean\n";
  for (std::size_t t = 0; t < r.means.size(); ++t)
    for (Index i = 0; i < r.means[t].size(); ++i) means << t + 1 << "," << i << "," << r.means[t][i] << "\n";
  std::ofstream diag(out + "/diagnostics.csv");
  diag << provenance_line(s.seed) << "\n" << "t,newton_iters,forecast_ms,update_ms\n";
  for (std::size_t t = 0; t < r.means.size(); ++t)
    diag << t + 1 << "," << r.newton_iterations[t] << "," << r.forecast_ms[t] << "," << r.update_ms[t] << "\n";
  std::cout << method->label << ": " << r.means.size() << " time points, " << r.total_ms() << " ms\n";
  return 0;
}

int cmd_decompose(const std::string& config, const std::string& out, const std::string& label) {
  const Scenario s = load_scenario(config);
  const MethodSpec& m = multires_method(s, label);
  const GridSpec grid = make_grid(s.model);
  const PartitionPtr part = method_partition(m, grid, derive_seed(s.seed, 1));
  const KernelCovSource src(part->ordered_points(), s.model.sigma0);
  DecomposeOptions opts;
  opts.mode = m.kind == "mrf" ? BasisMode::Identity : BasisMode::Eigen;
  const Decomposition d = decompose(src, part, opts);
  write_factor_binary(out, d.factor);
  std::cout << part->summary();
  std::cout << "n=" << part->n() << " columns=" << part->num_columns() << " -> " << out << "\n";
  return 0;
}

int cmd_bench(const std::string& scenario, const std::vector<int>& sizes, const std::string& out, int horizon,
              int replicates, bool verbose) {
  Scenario base = load_scenario(scenario);
  if (horizon > 0) base.model.horizon = horizon;
  if (replicates > 0) base.replicates = replicates;
  std::filesystem::create_directories(out);
  std::ofstream os(out + "/bench.csv");
  os.precision(10);
  os << provenance_line(base.seed) << "\n" << "n,method,mean_time_ms,time_ratio,total_mspe,ratio,failures\n";
  bool failed = false;
  for (int n : sizes) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (side * side != n) throw Error("bench size " + std::to_string(n) + " is not a square");
    Scenario s = base;
    s.model.nx = s.model.ny = side;
    s.model.circle_points = n;
    s.name = base.name + "-" + std::to_string(n);
    const MetricsTable t = run_scenario(s, {1, verbose});
    print_table(t);
    for (const auto& m : t.methods)
      os << n << "," << m.label << "," << m.mean_time_ms << "," << m.time_ratio << "," << m.total_mspe << ","
         << m.ratio << "," << m.failures << "\n";
    failed = failed || t.any_failure();
  }
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-resolution filtering via linear projection"};
  app.set_version_flag("--version", std::string(library_version()));
  app.require_subcommand(1);

  std::string scenario, out, config, data, label;
  int replicates = 0, threads = 1, horizon = 0;
  long long seed = -1;
  bool verbose = false, print_config = false;
  std::vector<int> sizes{900, 1764, 2704};

  auto* sim = app.add_subcommand("simulate", "Run a scenario and write metrics CSVs");
  sim->add_option("--scenario", scenario, "Preset name or JSON config path")->required();
  sim->add_option("--out", out, "Output directory");
  sim->add_flag("--print-config", print_config, "Print the resolved scenario as JSON and exit");
  sim->add_option("--replicates", replicates, "Override the replicate count");
  sim->add_option("--threads", threads, "Replicates run concurrently")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "Override the scenario seed");
  sim->add_flag("-v,--verbose", verbose);

  auto* filt = app.add_subcommand("filter", "Filter a grid CSV with a configured method");
  filt->add_option("--config", config, "Scenario JSON config or preset name")->required();
  filt->add_option("--data", data, "CSV with header t,lat_index,lon_index,value")->required();
  filt->add_option("--out", out, "Output directory")->required();
  filt->add_option("--method", label, "Method label (default: first method)");

  auto* dec = app.add_subcommand("decompose", "Decompose the initial covariance into a block factor");
  dec->add_option("--config", config, "Scenario JSON config or preset name")->required();
  dec->add_option("--out", out, "Binary factor file")->required();
  dec->add_option("--method", label, "Method label (default: first mrf or mrflp method)");

  auto* bench = app.add_subcommand("bench", "Timing study over grid sizes");
  bench->add_option("--scenario", scenario, "Preset name or JSON config path")->required();
  bench->add_option("--sizes", sizes, "Grid sizes (perfect squares)")->delimiter(',');
  bench->add_option("--out", out, "Output directory")->required();
  bench->add_option("--horizon", horizon, "Override T");
  bench->add_option("--replicates", replicates, "Override the replicate count");
  bench->add_flag("-v,--verbose", verbose);

  CLI11_PARSE(app, argc, argv);

  try {
    if (verbose) std::cerr << "kernels: " << kernels::isa_name(kernels::active_isa()) << "\n";
    if (*sim) {
      if (out.empty() && !print_config) throw Error("simulate needs --out");
      return cmd_simulate(scenario, out, replicates, threads, seed, verbose, print_config);
    }
    if (*filt) return cmd_filter(config, data, out, label);
    if (*dec) return cmd_decompose(config, out, label);
    if (*bench) return cmd_bench(scenario, sizes, out, horizon, replicates, verbose);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
