#pragma once

#include "mrflp/covariance.hpp"

#include <span>

namespace mrflp {

struct SpatialFit {
  double range = 0.0;
  double signal_variance = 0.0;
  double nugget_variance = 0.0;
  double log_likelihood = 0.0;
  int evaluations = 0;
};

struct MleOptions {
  int max_evaluations = 500;
  Index min_observations = 20;
  double tolerance = 1e-7;
  double min_nugget_ratio = 1e-6;
  double max_nugget_ratio = 1e3;
};

/// Zero-mean Gaussian log-likelihood of y under signal C(d) plus nugget.
double spatial_log_likelihood(std::span<const Point2> points, const VectorXd& y, const CovarianceFunction& signal,
                              double nugget);

/// Maximum-likelihood fit of (range, signal variance, nugget) for zero-mean
/// data. The signal variance is profiled out; Nelder-Mead runs over
/// log(range) and log(nugget / signal) inside box bounds. The range is bounded
/// below by the median nearest-neighbour distance and above by the point-set
/// diameter.
SpatialFit fit_spatial_mle(std::span<const Point2> points, const VectorXd& y, CovFamily family,
                           const MleOptions& options = {});

}  // namespace mrflp
