#include "filter_common.hpp"
#include "mrflp/filters.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

namespace mrflp {

using detail::Clock;
using detail::elapsed_ms;

namespace {

MatrixXd gather_cols(const MatrixXd& m, const std::vector<Index>& cols) {
  MatrixXd out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = m.col(cols[j]);
  return out;
}

MatrixXd gather_rows(const MatrixXd& m, const std::vector<Index>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

// sigma_f - sigma_f[:, O] S^{-1} sigma_f[O, :] with S = D^{-1/2} (I + D^{1/2} sigma_OO D^{1/2}) D^{-1/2},
// written through the factor G = L^{-1} D^{1/2} sigma_f[O, :].
MatrixXd posterior_covariance(const MatrixXd& sigma_f, const std::vector<Index>& sites, const VectorXd& d_obs) {
  const VectorXd sq = d_obs.cwiseSqrt();
  MatrixXd so = gather_rows(sigma_f, sites);  // |O| x n
  MatrixXd m = sq.asDiagonal() * gather_cols(so, sites) * sq.asDiagonal();
  m.diagonal().array() += 1.0;
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("innovation matrix is not positive definite");
  MatrixXd g = sq.asDiagonal() * so;
  llt.matrixL().solveInPlace(g);
  MatrixXd out = sigma_f;
  out.selfadjointView<Eigen::Lower>().rankUpdate(g.transpose(), -1.0);
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

// W^{-1} g without forming W^{-1}.
VectorXd apply_posterior(const MatrixXd& sigma_f, const std::vector<Index>& sites, const VectorXd& d_obs,
                         const VectorXd& g) {
  const VectorXd sq = d_obs.cwiseSqrt();
  const MatrixXd so = gather_rows(sigma_f, sites);
  MatrixXd m = sq.asDiagonal() * gather_cols(so, sites) * sq.asDiagonal();
  m.diagonal().array() += 1.0;
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("Newton system is not positive definite");
  const VectorXd sg = sigma_f * g;
  VectorXd v = sq.cwiseProduct(gather_rows(sg, sites).col(0));
  v = llt.solve(v);
  return sg - so.transpose() * sq.cwiseProduct(v);
}

MatrixXd forecast_covariance(const SparseRowMatrix& a, const MatrixXd& sigma, const MatrixXd& q) {
  const MatrixXd as = a * sigma;
  MatrixXd out = (a * as.transpose()).transpose();
  out += q;
  return 0.5 * (out + out.transpose());
}

}  // namespace

MatrixXd sampling_factor(const MatrixXd& c) {
  Eigen::LLT<MatrixXd> llt(c);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (c + c.transpose()));
  if (es.info() != Eigen::Success) throw Error("sampling_factor: eigen decomposition failed");
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

FilterResult kalman_filter(const StateSpaceModel& model, const FilterOptions&) {
  model.validate();
  if (!model.dynamics->is_linear()) throw Error("kalman_filter: needs linear dynamics");
  if (!model.obs.is_gaussian() || !(model.obs.tau2 > 0.0))
    throw Error("kalman_filter: needs Gaussian observations with positive variance");
  FilterResult res;
  auto t0 = Clock::now();
  MatrixXd sigma = model.sigma0->dense();
  const MatrixXd q = model.q->dense();
  VectorXd mu = model.mu0;
  double initial_ms = elapsed_ms(t0);
  for (int t = 1; t <= model.horizon(); ++t) {
    try {
      t0 = Clock::now();
      const SparseRowMatrix a = model.dynamics->jacobian(mu);
      mu = a * mu;
      sigma = forecast_covariance(a, sigma, q);
      res.forecast_ms.push_back(elapsed_ms(t0) + initial_ms);
      initial_ms = 0.0;

      t0 = Clock::now();
      const auto& y = model.data[static_cast<std::size_t>(t - 1)];
      if (!y.empty()) {
        const VectorXd d = VectorXd::Constant(y.size(), 1.0 / model.obs.tau2);
        VectorXd innov(y.size());
        for (Index i = 0; i < y.size(); ++i) innov[i] = y.values[i] - mu[y.sites[static_cast<std::size_t>(i)]];
        // K innov = Sigma[:, O] (Sigma_OO + R)^{-1} innov
        MatrixXd s = gather_rows(gather_cols(sigma, y.sites), y.sites);
        s.diagonal().array() += model.obs.tau2;
        Eigen::LLT<MatrixXd> llt(s);
        if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("innovation covariance is not positive definite");
        mu += gather_cols(sigma, y.sites) * llt.solve(innov);
        sigma = posterior_covariance(sigma, y.sites, d);
      }
      res.update_ms.push_back(elapsed_ms(t0));
      res.newton_iterations.push_back(0);
      res.means.push_back(mu);
    } catch (...) {
      detail::rethrow_at(t);
    }
  }
  res.final_state.t = model.horizon();
  res.final_state.mean = mu;
  res.final_state.covariance = std::move(sigma);
  return res;
}

FilterResult dense_laplace_filter(const StateSpaceModel& model, const FilterOptions& options) {
  model.validate();
  const Index n = model.n();
  const double root_n = std::sqrt(static_cast<double>(n));
  FilterResult res;
  auto t0 = Clock::now();
  MatrixXd sigma = model.sigma0->dense();
  const MatrixXd q = model.q->dense();
  VectorXd mu = model.mu0;
  double initial_ms = elapsed_ms(t0);
  for (int t = 1; t <= model.horizon(); ++t) {
    try {
      t0 = Clock::now();
      const SparseRowMatrix a = model.dynamics->jacobian(mu);
      const VectorXd mu_f = model.dynamics->apply(mu);
      const MatrixXd sigma_f = forecast_covariance(a, sigma, q);
      res.forecast_ms.push_back(elapsed_ms(t0) + initial_ms);
      initial_ms = 0.0;

      t0 = Clock::now();
      const auto& y = model.data[static_cast<std::size_t>(t - 1)];
      int iterations = 0;
      if (y.empty()) {
        mu = mu_f;
        sigma = sigma_f;
      } else {
        auto weights = [&](const VectorXd& x, VectorXd& g, VectorXd& d_obs) {
          g = VectorXd::Zero(n);
          d_obs.resize(y.size());
          for (Index i = 0; i < y.size(); ++i) {
            const Index s = y.sites[static_cast<std::size_t>(i)];
            double u = 0.0, d = 0.0;
            model.obs.score_hess(y.values[i], x[s], u, d);
            d_obs[i] = d;
            g[s] = d * (x[s] - mu_f[s]) + u;
          }
        };
        VectorXd x = mu_f;
        double prev_step = std::numeric_limits<double>::infinity();
        int stalled = 0;
        VectorXd g, d_obs;
        for (;;) {
          weights(x, g, d_obs);
          const VectorXd next = mu_f + apply_posterior(sigma_f, y.sites, d_obs, g);
          ++iterations;
          const double step = (next - x).norm() / root_n;
          if (!std::isfinite(step)) throw ConvergenceError("Newton iterate became non-finite");
          x = next;
          if (step < options.epsilon) break;
          if (iterations >= options.max_iterations)
            throw ConvergenceError("Newton did not converge in " + std::to_string(iterations) + " iterations");
          stalled = step >= prev_step ? stalled + 1 : 0;
          if (stalled >= options.divergence_window)
            throw ConvergenceError("Newton step norm failed to decrease for " + std::to_string(stalled) +
                                   " consecutive iterations");
          prev_step = step;
        }
        weights(x, g, d_obs);
        mu = x;
        sigma = posterior_covariance(sigma_f, y.sites, d_obs);
      }
      res.update_ms.push_back(elapsed_ms(t0));
      res.newton_iterations.push_back(iterations);
      res.means.push_back(mu);
    } catch (...) {
      detail::rethrow_at(t);
    }
  }
  res.final_state.t = model.horizon();
  res.final_state.mean = mu;
  res.final_state.covariance = std::move(sigma);
  return res;
}

FilterResult enkf_filter(const StateSpaceModel& model, const EnkfOptions& enkf, const FilterOptions&) {
  model.validate();
  if (!model.obs.is_gaussian()) throw Error("enkf_filter: needs Gaussian observations");
  if (enkf.members < 2) throw Error("enkf_filter: need at least 2 ensemble members");
  const Index n = model.n();
  const Index m = enkf.members;
  std::mt19937_64 rng(enkf.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto standard = [&](Index rows, Index cols) {
    MatrixXd z(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) z(i, j) = normal(rng);
    return z;
  };

  FilterResult res;
  auto t0 = Clock::now();
  const MatrixXd lq = sampling_factor(model.q->dense());
  MatrixXd ens = sampling_factor(model.sigma0->dense()) * standard(n, m);
  ens.colwise() += model.mu0;
  SparseRowMatrix taper;
  if (enkf.use_taper) taper = taper_matrix(model.grid.points, enkf.taper);
  double initial_ms = elapsed_ms(t0);

  for (int t = 1; t <= model.horizon(); ++t) {
    try {
      t0 = Clock::now();
      for (Index i = 0; i < m; ++i) ens.col(i) = model.dynamics->apply(ens.col(i));
      ens += lq * standard(n, m);
      res.forecast_ms.push_back(elapsed_ms(t0) + initial_ms);
      initial_ms = 0.0;

      t0 = Clock::now();
      const auto& y = model.data[static_cast<std::size_t>(t - 1)];
      if (!y.empty()) {
        const Index k = y.size();
        const VectorXd mean = ens.rowwise().mean();
        const MatrixXd anom = ens.colwise() - mean;
        const double scale = 1.0 / static_cast<double>(m - 1);
        // C[:, O], evaluated only where the taper is nonzero
        MatrixXd c_o = MatrixXd::Zero(n, k);
        if (enkf.use_taper) {
          for (Index j = 0; j < k; ++j) {
            const Index s = y.sites[static_cast<std::size_t>(j)];
            for (SparseRowMatrix::InnerIterator it(taper, s); it; ++it)
              c_o(it.col(), j) = it.value() * scale * anom.row(it.col()).dot(anom.row(s));
          }
        } else {
          c_o = scale * anom * gather_rows(anom, y.sites).transpose();
        }
        MatrixXd s = gather_rows(c_o, y.sites);
        s = 0.5 * (s + s.transpose());
        s.diagonal().array() += model.obs.tau2;
        Eigen::LLT<MatrixXd> llt(s);
        if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("EnKF innovation matrix is singular");
        MatrixXd innov = std::sqrt(model.obs.tau2) * standard(k, m);
        for (Index i = 0; i < m; ++i)
          for (Index j = 0; j < k; ++j) innov(j, i) += y.values[j] - ens(y.sites[static_cast<std::size_t>(j)], i);
        ens.noalias() += c_o * llt.solve(innov);
      }
      res.update_ms.push_back(elapsed_ms(t0));
      res.newton_iterations.push_back(0);
      res.means.push_back(ens.rowwise().mean());
    } catch (...) {
      detail::rethrow_at(t);
    }
  }
  res.final_state.t = model.horizon();
  res.final_state.mean = res.means.empty() ? model.mu0 : res.means.back();
  return res;
}

}  // namespace mrflp
