#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mrflp {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;
using SparseColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, Index>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A region's projected knot covariance lost rank (eigenvalue or pivot below tolerance).
class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive definite failed to factor.
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

/// Newton iteration did not meet its stopping rule.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace mrflp
