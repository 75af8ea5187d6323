#include "filter_common.hpp"
#include "mrflp/filters.hpp"

#include <cmath>
#include <limits>

namespace mrflp {

using detail::Clock;
using detail::elapsed_ms;

namespace {

enum class Update { Gaussian, Newton };

struct OrderedModel {
  PartitionPtr part;
  DynamicsPtr dynamics;
  CovSourcePtr q;
  CovSourcePtr sigma0;
  VectorXd mu0;
  std::vector<ObservationSet> data;
};

CovSourcePtr permute_source(const CovSourcePtr& src, const MultiResPartition& p) {
  if (const auto* k = dynamic_cast<const KernelCovSource*>(src.get())) {
    std::vector<Point2> pts(static_cast<std::size_t>(p.n()));
    for (Index i = 0; i < p.n(); ++i)
      pts[static_cast<std::size_t>(i)] = k->points()[static_cast<std::size_t>(p.to_original()[static_cast<std::size_t>(i)])];
    return std::make_shared<KernelCovSource>(std::move(pts), k->function());
  }
  return std::make_shared<PermutedCovSource>(src, p.to_original());
}

OrderedModel to_ordered_model(const StateSpaceModel& m, const PartitionPtr& part) {
  m.validate();
  if (!part || part->n() != m.n()) throw Error("partition does not match the model grid");
  OrderedModel o;
  o.part = part;
  o.dynamics = std::make_shared<PermutedDynamics>(m.dynamics, part->to_original());
  o.q = permute_source(m.q, *part);
  o.sigma0 = permute_source(m.sigma0, *part);
  o.mu0 = to_ordered(*part, m.mu0);
  o.data.reserve(m.data.size());
  for (const auto& d : m.data) o.data.push_back(to_ordered(*part, d));
  return o;
}

struct Laplace {
  BlockGram gram;
  BlockTriangular chol;
  BlockTriangular chol_inverse;
  BlockFactor factor;
};

// Site weights and scores of the likelihood at x; zero away from the observed sites.
void score_weights(const ObservationModel& obs, const ObservationSet& y, const VectorXd& x, VectorXd& u,
                   VectorXd& d) {
  u = VectorXd::Zero(x.size());
  d = VectorXd::Zero(x.size());
  for (std::size_t i = 0; i < y.sites.size(); ++i) {
    const Index s = y.sites[i];
    obs.score_hess(y.values[static_cast<Index>(i)], x[s], u[s], d[s]);
  }
}

Laplace factorize(const BlockFactor& b, const VectorXd& d) {
  Laplace out{gram_plus_identity(b, d), {}, {}, {}};
  out.chol = structured_cholesky(out.gram);
  out.chol_inverse = invert_lower_triangular(out.chol);
  out.factor = factor_postmultiply(b, out.chol_inverse);
  return out;
}

FilterResult run(const StateSpaceModel& model, const PartitionPtr& partition, const FilterOptions& options,
                 Update update) {
  OrderedModel om = to_ordered_model(model, partition);
  if (update == Update::Gaussian && !model.obs.is_gaussian())
    throw Error("mrf_lp_filter: closed-form update needs Gaussian observations");
  if (update == Update::Gaussian && !(model.obs.tau2 > 0.0))
    throw Error("mrf_lp_filter: observation variance must be > 0");
  const Index n = model.n();
  const int horizon = model.horizon();
  const double root_n = std::sqrt(static_cast<double>(n));

  FilterResult res;
  res.means.reserve(static_cast<std::size_t>(horizon));
  VectorXd mu = om.mu0;
  BlockFactor b;

  auto t0 = Clock::now();
  try {
    b = decompose(*om.sigma0, om.part, options.decompose).factor;
  } catch (...) {
    detail::rethrow_at(0);
  }
  double initial_ms = elapsed_ms(t0);

  for (int t = 1; t <= horizon; ++t) {
    try {
      // forecast
      t0 = Clock::now();
      const SparseRowMatrix jac = om.dynamics->jacobian(mu);
      const VectorXd mu_f = om.dynamics->apply(mu);
      auto src = FactorPlusCovSource(sparse_times_factor(jac, b), om.q);
      BlockFactor b_f = decompose(src, om.part, options.decompose).factor;
      res.forecast_ms.push_back(elapsed_ms(t0) + initial_ms);
      initial_ms = 0.0;

      // update
      t0 = Clock::now();
      const ObservationSet& y = om.data[static_cast<std::size_t>(t - 1)];
      StepTrace trace;
      trace.t = t;
      std::optional<Laplace> lap;
      int iterations = 0;
      if (y.empty()) {
        mu = mu_f;
        b = b_f;
      } else if (update == Update::Gaussian) {
        VectorXd d = VectorXd::Zero(n);
        VectorXd z = VectorXd::Zero(n);
        for (std::size_t i = 0; i < y.sites.size(); ++i) {
          const Index s = y.sites[i];
          d[s] = 1.0 / model.obs.tau2;
          z[s] = (y.values[static_cast<Index>(i)] - mu_f[s]) / model.obs.tau2;
        }
        lap = factorize(b_f, d);
        mu = mu_f + lap->factor.multiply(lap->factor.multiply_transpose(z));
        b = lap->factor;
      } else {
        VectorXd x = mu_f;
        double prev_step = std::numeric_limits<double>::infinity();
        int stalled = 0;
        for (;;) {
          NewtonStep st = laplace_newton_step(mu_f, b_f, x, model.obs, y);
          ++iterations;
          const double step = (st.x - x).norm() / root_n;
          if (!std::isfinite(step)) throw ConvergenceError("Newton iterate became non-finite");
          x = std::move(st.x);
          if (step < options.epsilon) break;
          if (iterations >= options.max_iterations)
            throw ConvergenceError("Newton did not converge in " + std::to_string(iterations) +
                                   " iterations (last step " + std::to_string(step) + ")");
          stalled = step >= prev_step ? stalled + 1 : 0;
          if (stalled >= options.divergence_window)
            throw ConvergenceError("Newton step norm failed to decrease for " + std::to_string(stalled) +
                                   " consecutive iterations (last step " + std::to_string(step) + ")");
          prev_step = step;
        }
        VectorXd u, d;
        score_weights(model.obs, y, x, u, d);
        lap = factorize(b_f, d);
        mu = x;
        b = lap->factor;
      }
      res.update_ms.push_back(elapsed_ms(t0));
      res.newton_iterations.push_back(iterations);
      res.means.push_back(to_original(*om.part, mu));
      if (options.keep_factors) res.factors.push_back(b);
      if (options.observer) {
        trace.forecast_factor = &b_f;
        trace.filtered_factor = &b;
        trace.newton_iterations = iterations;
        if (lap) {
          trace.gram = &lap->gram;
          trace.chol = &lap->chol;
          trace.chol_inverse = &lap->chol_inverse;
        }
        options.observer(trace);
      }
    } catch (...) {
      detail::rethrow_at(t);
    }
  }
  res.final_state.t = horizon;
  res.final_state.mean = to_original(*om.part, mu);
  res.final_state.factor = std::move(b);
  return res;
}

}  // namespace

double FilterResult::total_ms() const {
  double s = 0.0;
  for (double v : forecast_ms) s += v;
  for (double v : update_ms) s += v;
  return s;
}

NewtonStep laplace_newton_step(const VectorXd& mu_f, const BlockFactor& b_f, const VectorXd& x,
                               const ObservationModel& obs, const ObservationSet& y) {
  VectorXd u, d;
  score_weights(obs, y, x, u, d);
  Laplace lap = factorize(b_f, d);
  const VectorXd g = d.cwiseProduct(x - mu_f) + u;
  NewtonStep out;
  out.x = mu_f + lap.factor.multiply(lap.factor.multiply_transpose(g));
  out.factor = std::move(lap.factor);
  out.gram = std::move(lap.gram);
  out.chol = std::move(lap.chol);
  out.chol_inverse = std::move(lap.chol_inverse);
  return out;
}

FilterResult mrf_lp_filter(const StateSpaceModel& model, const PartitionPtr& partition, const FilterOptions& options) {
  if (!model.dynamics->is_linear()) throw Error("mrf_lp_filter: needs linear dynamics");
  return run(model, partition, options, Update::Gaussian);
}

FilterResult mrf_lp_filter_nongaussian(const StateSpaceModel& model, const PartitionPtr& partition,
                                       const FilterOptions& options) {
  if (!model.dynamics->is_linear()) throw Error("mrf_lp_filter_nongaussian: needs linear dynamics");
  return run(model, partition, options, Update::Newton);
}

FilterResult mrf_lp_filter_nonlinear(const StateSpaceModel& model, const PartitionPtr& partition,
                                     const FilterOptions& options) {
  return run(model, partition, options, Update::Newton);
}

ForecastResult forecast(const StateSpaceModel& model, const PartitionPtr& partition, const FilterState& state,
                        int horizon, bool with_factors, const DecomposeOptions& options) {
  if (horizon < 0) throw Error("forecast: horizon must be >= 0");
  OrderedModel om = to_ordered_model(model, partition);
  if (state.mean.size() != model.n()) throw Error("forecast: state mean has the wrong length");
  if (with_factors && !state.factor) throw Error("forecast: factors requested but the state carries none");
  ForecastResult out;
  VectorXd mu = to_ordered(*om.part, state.mean);
  out.means.push_back(state.mean);
  std::optional<BlockFactor> b = state.factor;
  for (int h = 1; h <= horizon; ++h) {
    if (with_factors) {
      auto src = FactorPlusCovSource(sparse_times_factor(om.dynamics->jacobian(mu), *b), om.q);
      b = decompose(src, om.part, options).factor;
      out.factors.push_back(*b);
    }
    mu = om.dynamics->apply(mu);
    out.means.push_back(to_original(*om.part, mu));
  }
  return out;
}

}  // namespace mrflp
