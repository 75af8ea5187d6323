#include "mrflp/mle.hpp"

#include "mrflp/kernels.hpp"

#include <Eigen/Cholesky>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

namespace mrflp {

namespace {

struct Problem {
  MatrixXd dist;
  VectorXd y;
  CovFamily family;
  double log_range_lo, log_range_hi;
  double log_ratio_lo, log_ratio_hi;
  int evaluations = 0;
  double best = std::numeric_limits<double>::infinity();
  double best_range = 0.0, best_ratio = 0.0, best_sigma2 = 0.0;
};

// z in R maps smoothly into (lo, hi)
double squash(double z, double lo, double hi) { return lo + (hi - lo) / (1.0 + std::exp(-z)); }
double unsquash(double v, double lo, double hi) {
  const double p = std::clamp((v - lo) / (hi - lo), 1e-9, 1.0 - 1e-9);
  return std::log(p / (1.0 - p));
}

// -2 log-likelihood with the signal variance profiled out
double profiled_objective(const gsl_vector* z, void* params) {
  auto* p = static_cast<Problem*>(params);
  ++p->evaluations;
  const double range = std::exp(squash(gsl_vector_get(z, 0), p->log_range_lo, p->log_range_hi));
  const double ratio = std::exp(squash(gsl_vector_get(z, 1), p->log_ratio_lo, p->log_ratio_hi));
  const Index n = p->y.size();
  MatrixXd c(n, n);
  const CovarianceFunction f{p->family, 1.0, range};
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) c(i, j) = f(p->dist(i, j));
  c.diagonal().array() += ratio;
  Eigen::LLT<MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::max();
  const VectorXd a = llt.matrixL().solve(p->y);
  const double sigma2 = a.squaredNorm() / static_cast<double>(n);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double obj = static_cast<double>(n) * std::log(sigma2) + logdet;
  if (obj < p->best) {
    p->best = obj;
    p->best_range = range;
    p->best_ratio = ratio;
    p->best_sigma2 = sigma2;
  }
  return obj;
}

}  // namespace

double spatial_log_likelihood(std::span<const Point2> points, const VectorXd& y, const CovarianceFunction& signal,
                              double nugget) {
  MatrixXd c = cov_block(points, points, signal);
  c.diagonal().array() += nugget;
  Eigen::LLT<MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("spatial_log_likelihood: covariance not PD");
  const VectorXd a = llt.matrixL().solve(y);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double n = static_cast<double>(y.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + logdet + a.squaredNorm());
}

SpatialFit fit_spatial_mle(std::span<const Point2> points, const VectorXd& y, CovFamily family,
                           const MleOptions& options) {
  const Index n = static_cast<Index>(points.size());
  if (y.size() != n) throw Error("fit_spatial_mle: data length does not match point count");
  if (n < options.min_observations)
    throw Error("fit_spatial_mle: need at least " + std::to_string(options.min_observations) + " observations, got " +
                std::to_string(n));

  auto prob = std::make_unique<Problem>();
  prob->family = family;
  prob->y = y;
  std::vector<double> xs(points.size()), ys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    xs[i] = points[i].x;
    ys[i] = points[i].y;
  }
  prob->dist.resize(n, n);
  kernels::pairwise_distance(points.size(), xs.data(), ys.data(), points.size(), xs.data(), ys.data(),
                             prob->dist.data(), static_cast<std::size_t>(n));

  std::vector<double> nn(points.size(), std::numeric_limits<double>::infinity());
  double diameter = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      nn[static_cast<std::size_t>(i)] = std::min(nn[static_cast<std::size_t>(i)], prob->dist(i, j));
      diameter = std::max(diameter, prob->dist(i, j));
    }
  std::nth_element(nn.begin(), nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2), nn.end());
  const double range_lo = std::max(nn[nn.size() / 2], 1e-8);
  const double range_hi = std::max(diameter, 2.0 * range_lo);
  prob->log_range_lo = std::log(range_lo);
  prob->log_range_hi = std::log(range_hi);
  prob->log_ratio_lo = std::log(options.min_nugget_ratio);
  prob->log_ratio_hi = std::log(options.max_nugget_ratio);

  gsl_set_error_handler_off();
  gsl_multimin_function fn{&profiled_objective, 2, prob.get()};
  gsl_vector* start = gsl_vector_alloc(2);
  gsl_vector* step = gsl_vector_alloc(2);
  const double range0 = std::clamp(0.1 * diameter, range_lo * 1.01, range_hi * 0.99);
  gsl_vector_set(start, 0, unsquash(std::log(range0), prob->log_range_lo, prob->log_range_hi));
  gsl_vector_set(start, 1, unsquash(std::log(0.1), prob->log_ratio_lo, prob->log_ratio_hi));
  gsl_vector_set_all(step, 1.0);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
  gsl_multimin_fminimizer_set(s, &fn, start, step);

  bool converged = false;
  while (prob->evaluations < options.max_evaluations) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), options.tolerance) == GSL_SUCCESS) {
      converged = true;
      break;
    }
  }
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(start);
  gsl_vector_free(step);

  SpatialFit fit;
  fit.range = prob->best_range;
  fit.signal_variance = prob->best_sigma2;
  fit.nugget_variance = prob->best_ratio * prob->best_sigma2;
  fit.evaluations = prob->evaluations;
  const double nd = static_cast<double>(n);
  fit.log_likelihood = -0.5 * (prob->best + nd + nd * std::log(2.0 * std::numbers::pi));
  if (!converged)
    throw ConvergenceError("fit_spatial_mle: no convergence after " + std::to_string(prob->evaluations) +
                           " evaluations; best range=" + std::to_string(fit.range) +
                           " signal=" + std::to_string(fit.signal_variance) +
                           " nugget=" + std::to_string(fit.nugget_variance));
  return fit;
}

}  // namespace mrflp
