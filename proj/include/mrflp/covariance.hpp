#pragma once

#include "mrflp/types.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mrflp {

enum class CovFamily { Exponential, Matern15 };

/// Isotropic stationary covariance C(d).
///   exponential: sigma2 * exp(-d / range)
///   matern15:    sigma2 * (1 + sqrt(3) d / range) * exp(-sqrt(3) d / range)
/// A zero variance is accepted and yields the zero covariance.
struct CovarianceFunction {
  CovFamily family = CovFamily::Exponential;
  double variance = 1.0;
  double range = 0.15;

  double operator()(double d) const;
  void validate() const;
};

CovFamily parse_cov_family(std::string_view name);
std::string_view cov_family_name(CovFamily family);

/// Dense block C(|rows_i - cols_j|). Exactly symmetric when rows and cols are the same list.
MatrixXd cov_block(std::span<const Point2> rows, std::span<const Point2> cols, const CovarianceFunction& f);

/// Same as cov_block for index subsets of one point list.
MatrixXd cov_block(std::span<const Point2> points, std::span<const Index> rows, std::span<const Index> cols,
                   const CovarianceFunction& f);

/// Draws from N(0, C) on a point set: returns a lower Cholesky factor of C + jitter*I.
MatrixXd cov_cholesky(std::span<const Point2> points, const CovarianceFunction& f, double jitter = 0.0);

}  // namespace mrflp
