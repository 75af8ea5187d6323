#include "mrflp/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#ifndef MRFLP_VERSION
#define MRFLP_VERSION "0.0.0"
#endif

namespace mrflp {

using json = nlohmann::json;

std::string_view library_version() { return MRFLP_VERSION; }

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t x = base ^ (0x9E3779B97F4A7C15ULL * (index + 1));
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

MethodSpec mrf_method(int levels) {
  MethodSpec m;
  m.kind = "mrf";
  m.label = "mrf-M" + std::to_string(levels);
  m.levels = levels;
  m.branching.assign(static_cast<std::size_t>(levels), 2);
  if (levels == 4)
    m.knots = {10, 10, 10, 5, 5};
  else
    m.knots.assign(static_cast<std::size_t>(levels + 1), 10);
  m.ranks = m.knots;
  return m;
}

MethodSpec mrflp_method(int levels) {
  MethodSpec m;
  m.kind = "mrflp";
  m.label = "mrflp-M" + std::to_string(levels);
  m.levels = levels;
  m.branching.assign(static_cast<std::size_t>(levels), 2);
  if (levels == 4) {
    m.knots = {50, 50, 50, 10, 10};
    m.ranks = {10, 10, 10, 5, 5};
  } else {
    m.knots.assign(static_cast<std::size_t>(levels + 1), 50);
    m.ranks.assign(static_cast<std::size_t>(levels + 1), 10);
  }
  return m;
}

namespace {

MethodSpec simple_method(const std::string& kind) {
  MethodSpec m;
  m.kind = kind;
  m.label = kind;
  return m;
}

std::vector<MethodSpec> multires_methods() {
  return {mrf_method(2), mrflp_method(2), mrf_method(4), mrflp_method(4)};
}

Scenario baseline() {
  Scenario s;
  s.name = "baseline";
  s.reference = "exact";
  s.methods.push_back(simple_method("exact"));
  for (auto& m : multires_methods()) s.methods.push_back(m);
  return s;
}

Scenario lorenz_base(const std::string& name) {
  Scenario s = baseline();
  s.name = name;
  s.model.geometry = "circle";
  s.model.circle_points = 1156;
  s.model.dynamics.kind = "lorenz05";
  s.model.obs.family = ObsFamily::Poisson;
  s.methods.clear();
  s.methods.push_back(simple_method("dense-laplace"));
  for (auto& m : multires_methods()) s.methods.push_back(m);
  s.reference = "dense-laplace";
  s.replicates = 30;
  return s;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"baseline", "small-sample", "low-noise", "smooth",          "gamma",
          "poisson",  "lorenz05",     "enkf-comparison", "scaling"};
}

Scenario preset_scenario(const std::string& name) {
  Scenario s = baseline();
  if (name == "baseline") return s;
  s.name = name;
  if (name == "small-sample") {
    s.model.observed_fraction = 0.1;
  } else if (name == "low-noise") {
    s.model.obs.tau2 = 0.02;
  } else if (name == "smooth") {
    s.model.sigma0.family = CovFamily::Matern15;
    s.model.q.family = CovFamily::Matern15;
  } else if (name == "gamma" || name == "poisson") {
    s.model.obs.family = name == "gamma" ? ObsFamily::Gamma : ObsFamily::Poisson;
    s.methods[0] = simple_method("dense-laplace");
    s.reference = "dense-laplace";
    s.replicates = 30;
  } else if (name == "lorenz05") {
    s = lorenz_base(name);
  } else if (name == "enkf-comparison") {
    s = lorenz_base(name);
    s.model.obs.family = ObsFamily::Gaussian;
    s.model.sigma0.family = CovFamily::Matern15;
    s.model.q.family = CovFamily::Matern15;
    s.methods = {simple_method("dense-laplace"), mrf_method(2), mrflp_method(2), simple_method("enkf")};
    s.methods.back().members = 30;
    s.methods.back().taper_nnz = 30;
    s.replicates = 10;
  } else if (name == "scaling") {
    s.model.dynamics.kind = "scaled-identity";
    s.model.dynamics.coefficient = 0.6;
    s.model.horizon = 50;
    s.methods = {simple_method("exact"), mrf_method(4), mrflp_method(4)};
    s.replicates = 1;
  } else {
    throw Error("unknown scenario preset '" + name + "'");
  }
  return s;
}

namespace {

json cov_to_json(const CovarianceFunction& f) {
  return {{"family", std::string(cov_family_name(f.family))}, {"variance", f.variance}, {"range", f.range}};
}

CovarianceFunction cov_from_json(const json& j, CovarianceFunction f) {
  if (j.contains("family")) f.family = parse_cov_family(j.at("family").get<std::string>());
  f.variance = j.value("variance", f.variance);
  f.range = j.value("range", f.range);
  f.validate();
  return f;
}

std::vector<int> level_values(const json& j, int levels, const std::string& key, std::vector<int> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number_integer()) return std::vector<int>(static_cast<std::size_t>(levels), v.get<int>());
  return v.get<std::vector<int>>();
}

MethodSpec method_from_json(const json& j) {
  MethodSpec m;
  m.kind = j.at("kind").get<std::string>();
  if (m.kind == "mrf" || m.kind == "mrflp") {
    const int levels = j.value("levels", 2);
    m = m.kind == "mrf" ? mrf_method(levels) : mrflp_method(levels);
    if (levels != 2 && levels != 4) {
      m.branching.assign(static_cast<std::size_t>(levels), 2);
      m.knots.assign(static_cast<std::size_t>(levels + 1), m.kind == "mrf" ? 10 : 50);
      m.ranks.assign(static_cast<std::size_t>(levels + 1), 10);
    }
    m.branching = level_values(j, levels, "branching", m.branching);
    m.knots = level_values(j, levels + 1, "knots", m.knots);
    m.ranks = m.kind == "mrf" ? m.knots : level_values(j, levels + 1, "ranks", m.ranks);
  } else if (m.kind != "exact" && m.kind != "enkf" && m.kind != "dense-laplace") {
    throw Error("unknown method kind '" + m.kind + "'");
  }
  m.label = j.value("label", m.kind == "mrf" || m.kind == "mrflp" ? m.label : m.kind);
  m.members = j.value("members", m.members);
  m.taper_nnz = j.value("taper_nnz", m.taper_nnz);
  if (j.contains("taper")) m.taper = parse_taper_kind(j.at("taper").get<std::string>());
  m.epsilon = j.value("epsilon", m.epsilon);
  return m;
}

json method_to_json(const MethodSpec& m) {
  json j{{"label", m.label}, {"kind", m.kind}};
  if (m.kind == "mrf" || m.kind == "mrflp") {
    j["levels"] = m.levels;
    j["branching"] = m.branching;
    j["knots"] = m.knots;
    j["ranks"] = m.ranks;
  }
  if (m.kind == "enkf") {
    j["members"] = m.members;
    j["taper_nnz"] = m.taper_nnz;
    j["taper"] = m.taper == TaperKind::Kanter ? "kanter" : "wendland2";
  }
  j["epsilon"] = m.epsilon;
  return j;
}

ModelSpec model_from_json(const json& j) {
  ModelSpec s;
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    s.geometry = g.value("geometry", s.geometry);
    s.nx = g.value("nx", s.nx);
    s.ny = g.value("ny", s.ny);
    s.circle_points = g.value("points", s.circle_points);
  }
  s.horizon = j.value("T", s.horizon);
  s.observed_fraction = j.value("observed_fraction", s.observed_fraction);
  s.mu0 = j.value("mu0", s.mu0);
  if (j.contains("dynamics")) {
    const auto& d = j.at("dynamics");
    s.dynamics.kind = d.value("kind", s.dynamics.kind);
    s.dynamics.alpha = d.value("alpha", s.dynamics.alpha);
    s.dynamics.beta = d.value("beta", s.dynamics.beta);
    s.dynamics.dt = d.value("dt", s.dynamics.dt);
    s.dynamics.forcing = d.value("forcing", s.dynamics.forcing);
    s.dynamics.coefficient = d.value("coefficient", s.dynamics.coefficient);
  }
  if (j.contains("sigma0")) s.sigma0 = cov_from_json(j.at("sigma0"), s.sigma0);
  if (j.contains("q")) s.q = cov_from_json(j.at("q"), s.q);
  if (j.contains("observation")) {
    const auto& o = j.at("observation");
    if (o.contains("family")) s.obs.family = parse_obs_family(o.at("family").get<std::string>());
    s.obs.tau2 = o.value("tau2", s.obs.tau2);
    s.obs.shape = o.value("shape", s.obs.shape);
  }
  if (s.observed_fraction < 0.0 || s.observed_fraction > 1.0) throw Error("observed_fraction must lie in [0, 1]");
  return s;
}

json model_to_json(const ModelSpec& s) {
  return {{"grid", {{"geometry", s.geometry}, {"nx", s.nx}, {"ny", s.ny}, {"points", s.circle_points}}},
          {"T", s.horizon},
          {"observed_fraction", s.observed_fraction},
          {"mu0", s.mu0},
          {"dynamics",
           {{"kind", s.dynamics.kind},
            {"alpha", s.dynamics.alpha},
            {"beta", s.dynamics.beta},
            {"dt", s.dynamics.dt},
            {"forcing", s.dynamics.forcing},
            {"coefficient", s.dynamics.coefficient}}},
          {"sigma0", cov_to_json(s.sigma0)},
          {"q", cov_to_json(s.q)},
          {"observation",
           {{"family", std::string(obs_family_name(s.obs.family))}, {"tau2", s.obs.tau2}, {"shape", s.obs.shape}}}};
}

}  // namespace

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::exception& e) {
    throw Error(std::string("scenario config: ") + e.what());
  }
  try {
    Scenario s = j.contains("preset") ? preset_scenario(j.at("preset").get<std::string>()) : Scenario{};
    s.name = j.value("name", s.name);
    s.seed = j.value("seed", s.seed);
    s.replicates = j.value("replicates", s.replicates);
    if (j.contains("model")) s.model = model_from_json(j.at("model"));
    if (j.contains("methods")) {
      s.methods.clear();
      for (const auto& m : j.at("methods")) s.methods.push_back(method_from_json(m));
    }
    s.reference = j.value("reference", s.reference.empty() && !s.methods.empty() ? s.methods.front().label
                                                                                 : s.reference);
    bool found = false;
    for (const auto& m : s.methods) found = found || m.label == s.reference;
    if (!found) throw Error("reference method '" + s.reference + "' is not among the methods");
    if (s.replicates < 1) throw Error("replicates must be >= 1");
    return s;
  } catch (const json::exception& e) {
    throw Error(std::string("scenario config: ") + e.what());
  }
}

std::string scenario_to_json(const Scenario& s) {
  json j{{"name", s.name}, {"seed", s.seed}, {"replicates", s.replicates}, {"reference", s.reference}};
  j["model"] = model_to_json(s.model);
  j["methods"] = json::array();
  for (const auto& m : s.methods) j["methods"].push_back(method_to_json(m));
  return j.dump(2);
}

Scenario load_scenario(const std::string& name_or_path) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return preset_scenario(name_or_path);
  std::ifstream in(name_or_path);
  if (!in) throw Error("no preset or readable config named '" + name_or_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

GridSpec make_grid(const ModelSpec& spec) {
  if (spec.geometry == "square") return GridSpec::regular_square(spec.nx, spec.ny);
  if (spec.geometry == "circle") return GridSpec::circle(spec.circle_points);
  throw Error("unknown geometry '" + spec.geometry + "'");
}

DynamicsPtr make_dynamics(const ModelSpec& spec, const GridSpec& grid) {
  const auto& d = spec.dynamics;
  if (d.kind == "advection") {
    if (!grid.is_regular()) throw Error("advection dynamics needs a regular square grid");
    return std::make_shared<LinearDynamics>(advection_diffusion_matrix(
        grid.nx, grid.ny, d.alpha, d.beta, 1.0 / (grid.nx + 1.0), 1.0 / (grid.ny + 1.0)));
  }
  if (d.kind == "lorenz05") return std::make_shared<Lorenz05Dynamics>(grid.size(), d.dt, d.forcing);
  if (d.kind == "scaled-identity") return make_scaled_identity(grid.size(), d.coefficient);
  if (d.kind == "quadratic") return std::make_shared<QuadraticMap>(grid.size());
  throw Error("unknown dynamics '" + d.kind + "'");
}

StateSpaceModel build_model(const ModelSpec& spec) {
  StateSpaceModel m;
  m.grid = make_grid(spec);
  m.dynamics = make_dynamics(spec, m.grid);
  m.q = std::make_shared<KernelCovSource>(m.grid.points, spec.q);
  m.sigma0 = std::make_shared<KernelCovSource>(m.grid.points, spec.sigma0);
  m.mu0 = VectorXd::Constant(m.grid.size(), spec.mu0);
  m.obs = spec.obs;
  return m;
}

Simulation simulate_truth(const StateSpaceModel& model, double observed_fraction, int horizon, std::uint64_t seed) {
  if (observed_fraction < 0.0 || observed_fraction > 1.0) throw Error("simulate_truth: fraction must lie in [0, 1]");
  const Index n = model.n();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](const MatrixXd& l) {
    VectorXd z(n);
    for (Index i = 0; i < n; ++i) z[i] = normal(rng);
    return VectorXd(l * z);
  };
  const MatrixXd l0 = sampling_factor(model.sigma0->dense());
  const MatrixXd lq = sampling_factor(model.q->dense());
  const Index k = static_cast<Index>(std::llround(observed_fraction * static_cast<double>(n)));
  Simulation sim;
  VectorXd x = model.mu0 + draw(l0);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (int t = 1; t <= horizon; ++t) {
    x = model.dynamics->apply(x) + draw(lq);
    sim.states.push_back(x);
    for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < k; ++i) {
      std::uniform_int_distribution<Index> pick(i, n - 1);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
    }
    ObservationSet obs;
    obs.sites.assign(perm.begin(), perm.begin() + k);
    std::sort(obs.sites.begin(), obs.sites.end());
    obs.values.resize(k);
    for (Index i = 0; i < k; ++i) obs.values[i] = model.obs.sample(x[obs.sites[static_cast<std::size_t>(i)]], rng);
    sim.data.push_back(std::move(obs));
  }
  return sim;
}

MspeSummary mspe(const std::vector<VectorXd>& estimates, const std::vector<VectorXd>& truth) {
  if (estimates.size() != truth.size()) throw Error("mspe: different numbers of time points");
  MspeSummary s;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (estimates[t].size() != truth[t].size() || truth[t].size() == 0) throw Error("mspe: shape mismatch");
    s.per_time.push_back((estimates[t] - truth[t]).squaredNorm() / static_cast<double>(truth[t].size()));
  }
  for (double v : s.per_time) s.total += v;
  if (!s.per_time.empty()) s.total /= static_cast<double>(s.per_time.size());
  return s;
}

PartitionPtr method_partition(const MethodSpec& m, const GridSpec& grid, std::uint64_t seed) {
  PartitionConfig c;
  c.levels = m.levels;
  c.branching = m.branching;
  c.knots = m.knots;
  c.ranks = m.kind == "mrf" ? m.knots : m.ranks;
  c.seed = seed;
  return build_partition(grid, c);
}

FilterResult run_method(const MethodSpec& m, const StateSpaceModel& model, std::uint64_t seed,
                        const FilterOptions& options) {
  FilterOptions opts = options;
  opts.epsilon = m.epsilon;
  if (m.kind == "exact") return kalman_filter(model, opts);
  if (m.kind == "dense-laplace") return dense_laplace_filter(model, opts);
  if (m.kind == "enkf") {
    EnkfOptions e;
    e.members = m.members;
    e.seed = derive_seed(seed, 2);
    e.taper.kind = m.taper;
    e.taper.radius = tune_taper_radius(model.grid.points, m.taper_nnz > 0 ? m.taper_nnz : m.members);
    return enkf_filter(model, e, opts);
  }
  if (m.kind == "mrf" || m.kind == "mrflp") {
    const auto part = method_partition(m, model.grid, derive_seed(seed, 1));
    opts.decompose.mode = m.kind == "mrf" ? BasisMode::Identity : BasisMode::Eigen;
    if (!model.dynamics->is_linear()) return mrf_lp_filter_nonlinear(model, part, opts);
    if (!model.obs.is_gaussian()) return mrf_lp_filter_nongaussian(model, part, opts);
    return mrf_lp_filter(model, part, opts);
  }
  throw Error("unknown method kind '" + m.kind + "'");
}

const MethodMetrics& MetricsTable::at(const std::string& label) const {
  for (const auto& m : methods)
    if (m.label == label) return m;
  throw Error("no method labelled '" + label + "'");
}

bool MetricsTable::any_failure() const {
  for (const auto& m : methods)
    if (m.failures > 0) return true;
  return false;
}

MetricsTable run_scenario(const Scenario& s, const RunOptions& options) {
  const StateSpaceModel base = build_model(s.model);
  const std::size_t nm = s.methods.size();
  struct Cell {
    bool ok = false;
    std::vector<double> per_time;
    double ms = 0.0;
    double newton = 0.0;
    std::string error;
  };
  std::vector<std::vector<Cell>> cells(static_cast<std::size_t>(s.replicates), std::vector<Cell>(nm));
  std::mutex log_mutex;

  auto run_replicate = [&](int rep) {
    const std::uint64_t rseed = derive_seed(s.seed, static_cast<std::uint64_t>(rep));
    StateSpaceModel model = base;
    Simulation sim = simulate_truth(model, s.model.observed_fraction, s.model.horizon, derive_seed(rseed, 0));
    model.data = std::move(sim.data);
    for (std::size_t k = 0; k < nm; ++k) {
      Cell& c = cells[static_cast<std::size_t>(rep)][k];
      try {
        const FilterResult r = run_method(s.methods[k], model, rseed);
        c.per_time = mspe(r.means, sim.states).per_time;
        c.ms = r.total_ms();
        double it = 0.0;
        for (int v : r.newton_iterations) it += v;
        c.newton = r.newton_iterations.empty() ? 0.0 : it / static_cast<double>(r.newton_iterations.size());
        c.ok = true;
      } catch (const std::exception& e) {
        c.error = "replicate " + std::to_string(rep) + ": " + e.what();
      }
      if (options.verbose) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << s.name << " rep " << rep << " " << s.methods[k].label << ": "
                  << (c.ok ? "ok " + std::to_string(c.ms) + " ms" : c.error) << "\n";
      }
    }
  };

  const int threads = std::max(1, std::min(options.threads, s.replicates));
  if (threads == 1) {
    for (int rep = 0; rep < s.replicates; ++rep) run_replicate(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i)
      pool.emplace_back([&] {
        for (int rep = next++; rep < s.replicates; rep = next++) run_replicate(rep);
      });
    for (auto& th : pool) th.join();
  }

  MetricsTable table;
  table.scenario = s.name;
  table.reference = s.reference;
  table.seed = s.seed;
  table.replicates = s.replicates;
  const auto horizon = static_cast<std::size_t>(s.model.horizon);
  for (std::size_t k = 0; k < nm; ++k) {
    MethodMetrics mm;
    mm.label = s.methods[k].label;
    mm.per_time_mspe.assign(horizon, 0.0);
    int ok = 0;
    for (int rep = 0; rep < s.replicates; ++rep) {
      const Cell& c = cells[static_cast<std::size_t>(rep)][k];
      if (!c.ok) {
        ++mm.failures;
        mm.errors.push_back(c.error);
        continue;
      }
      ++ok;
      for (std::size_t t = 0; t < horizon; ++t) mm.per_time_mspe[t] += c.per_time[t];
      mm.mean_time_ms += c.ms;
      mm.mean_newton_iterations += c.newton;
    }
    if (ok > 0) {
      for (auto& v : mm.per_time_mspe) v /= ok;
      mm.mean_time_ms /= ok;
      mm.mean_newton_iterations /= ok;
    } else {
      for (auto& v : mm.per_time_mspe) v = std::nan("");
      mm.mean_time_ms = std::nan("");
    }
    for (double v : mm.per_time_mspe) mm.total_mspe += v;
    if (horizon > 0) mm.total_mspe /= static_cast<double>(horizon);
    table.methods.push_back(std::move(mm));
  }
  const MethodMetrics ref = table.at(s.reference);
  for (auto& mm : table.methods) {
    mm.ratio = mm.label == ref.label ? 1.0 : mm.total_mspe / ref.total_mspe;
    mm.time_ratio = mm.label == ref.label ? 1.0 : mm.mean_time_ms / ref.mean_time_ms;
    mm.per_time_ratio.resize(horizon);
    for (std::size_t t = 0; t < horizon; ++t)
      mm.per_time_ratio[t] = mm.label == ref.label ? 1.0 : mm.per_time_mspe[t] / ref.per_time_mspe[t];
  }
  return table;
}

std::string provenance_line(std::uint64_t seed) {
  return "# seed=" + std::to_string(seed) + ", version=" + std::string(library_version());
}

void write_metrics_csv(const MetricsTable& m, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir + "/metrics_per_time.csv");
    if (!os) throw Error("cannot write " + dir + "/metrics_per_time.csv");
    os.precision(10);
    os << provenance_line(m.seed) << "\n" << "t,method,mspe,ratio\n";
    for (const auto& mm : m.methods)
      for (std::size_t t = 0; t < mm.per_time_mspe.size(); ++t)
        os << t + 1 << "," << mm.label << "," << mm.per_time_mspe[t] << "," << mm.per_time_ratio[t] << "\n";
  }
  std::ofstream os(dir + "/metrics_summary.csv");
  if (!os) throw Error("cannot write " + dir + "/metrics_summary.csv");
  os.precision(10);
  os << provenance_line(m.seed) << "\n"
     << "method,total_mspe,ratio,mean_time_ms,time_ratio,mean_newton_iterations,failures\n";
  for (const auto& mm : m.methods)
    os << mm.label << "," << mm.total_mspe << "," << mm.ratio << "," << mm.mean_time_ms << "," << mm.time_ratio << ","
       << mm.mean_newton_iterations << "," << mm.failures << "\n";
}

}  // namespace mrflp
