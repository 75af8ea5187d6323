#pragma once

#include "mrflp/covariance.hpp"
#include "mrflp/types.hpp"

#include <memory>
#include <span>
#include <vector>

namespace mrflp {

/// Supplies arbitrary sub-blocks of an n x n covariance without materializing it.
class CovSource {
 public:
  virtual ~CovSource() = default;
  virtual Index size() const = 0;
  virtual MatrixXd block(std::span<const Index> rows, std::span<const Index> cols) const = 0;
  /// Rows given as the contiguous range [row_begin, row_end).
  virtual MatrixXd block(Index row_begin, Index row_end, std::span<const Index> cols) const;
  MatrixXd dense() const;
};

using CovSourcePtr = std::shared_ptr<const CovSource>;

/// Covariance function evaluated on a point list.
class KernelCovSource final : public CovSource {
 public:
  KernelCovSource(std::vector<Point2> points, CovarianceFunction f);
  Index size() const override { return static_cast<Index>(points_.size()); }
  MatrixXd block(std::span<const Index> rows, std::span<const Index> cols) const override;
  MatrixXd block(Index row_begin, Index row_end, std::span<const Index> cols) const override;
  const CovarianceFunction& function() const { return f_; }
  const std::vector<Point2>& points() const { return points_; }

 private:
  std::vector<Point2> points_;
  CovarianceFunction f_;
};

/// Explicit dense matrix.
class DenseCovSource final : public CovSource {
 public:
  explicit DenseCovSource(MatrixXd sigma);
  Index size() const override { return sigma_.rows(); }
  MatrixXd block(std::span<const Index> rows, std::span<const Index> cols) const override;
  const MatrixXd& matrix() const { return sigma_; }

 private:
  MatrixXd sigma_;
};

/// Views a source through an index map: block(i, j) = inner(map[i], map[j]).
class PermutedCovSource final : public CovSource {
 public:
  PermutedCovSource(CovSourcePtr inner, std::vector<Index> map);
  Index size() const override { return static_cast<Index>(map_.size()); }
  MatrixXd block(std::span<const Index> rows, std::span<const Index> cols) const override;

 private:
  CovSourcePtr inner_;
  std::vector<Index> map_;
};

/// F F^T + Q for a sparse tall F, evaluated blockwise from the rows of F that
/// the block touches.
class FactorPlusCovSource final : public CovSource {
 public:
  FactorPlusCovSource(SparseRowMatrix factor, CovSourcePtr q);
  Index size() const override { return factor_.rows(); }
  MatrixXd block(std::span<const Index> rows, std::span<const Index> cols) const override;
  MatrixXd block(Index row_begin, Index row_end, std::span<const Index> cols) const override;
  const SparseRowMatrix& factor() const { return factor_; }

 private:
  MatrixXd product(std::span<const Index> rows, std::span<const Index> cols) const;
  SparseRowMatrix factor_;
  CovSourcePtr q_;
};

}  // namespace mrflp
