#include "mrflp/cov_source.hpp"

#include <algorithm>
#include <numeric>

namespace mrflp {

namespace {

std::vector<Index> iota_range(Index begin, Index end) {
  std::vector<Index> v(static_cast<std::size_t>(end - begin));
  std::iota(v.begin(), v.end(), begin);
  return v;
}

}  // namespace

MatrixXd CovSource::block(Index row_begin, Index row_end, std::span<const Index> cols) const {
  const auto rows = iota_range(row_begin, row_end);
  return block(std::span<const Index>(rows), cols);
}

MatrixXd CovSource::dense() const {
  const auto all = iota_range(0, size());
  return block(std::span<const Index>(all), std::span<const Index>(all));
}

KernelCovSource::KernelCovSource(std::vector<Point2> points, CovarianceFunction f)
    : points_(std::move(points)), f_(f) {
  f_.validate();
}

MatrixXd KernelCovSource::block(std::span<const Index> rows, std::span<const Index> cols) const {
  return cov_block(points_, rows, cols, f_);
}

MatrixXd KernelCovSource::block(Index row_begin, Index row_end, std::span<const Index> cols) const {
  std::vector<Point2> b(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) b[j] = points_[static_cast<std::size_t>(cols[j])];
  return cov_block(std::span<const Point2>(points_).subspan(static_cast<std::size_t>(row_begin),
                                                             static_cast<std::size_t>(row_end - row_begin)),
                   b, f_);
}

DenseCovSource::DenseCovSource(MatrixXd sigma) : sigma_(std::move(sigma)) {
  if (sigma_.rows() != sigma_.cols()) throw Error("DenseCovSource: matrix must be square");
}

MatrixXd DenseCovSource::block(std::span<const Index> rows, std::span<const Index> cols) const {
  MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows.size(); ++i)
      out(static_cast<Index>(i), static_cast<Index>(j)) = sigma_(rows[i], cols[j]);
  return out;
}

PermutedCovSource::PermutedCovSource(CovSourcePtr inner, std::vector<Index> map)
    : inner_(std::move(inner)), map_(std::move(map)) {
  if (static_cast<Index>(map_.size()) != inner_->size()) throw Error("PermutedCovSource: map size mismatch");
}

MatrixXd PermutedCovSource::block(std::span<const Index> rows, std::span<const Index> cols) const {
  std::vector<Index> r(rows.size()), c(cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) r[i] = map_[static_cast<std::size_t>(rows[i])];
  for (std::size_t j = 0; j < cols.size(); ++j) c[j] = map_[static_cast<std::size_t>(cols[j])];
  return inner_->block(std::span<const Index>(r), std::span<const Index>(c));
}

FactorPlusCovSource::FactorPlusCovSource(SparseRowMatrix factor, CovSourcePtr q)
    : factor_(std::move(factor)), q_(std::move(q)) {
  factor_.makeCompressed();
  if (q_ && q_->size() != factor_.rows()) throw Error("FactorPlusCovSource: Q size does not match factor rows");
}

MatrixXd FactorPlusCovSource::product(std::span<const Index> rows, std::span<const Index> cols) const {
  // Only factor columns touched by the column rows can contribute.
  std::vector<Index> local(static_cast<std::size_t>(factor_.cols()), -1);
  std::vector<Index> used;
  for (Index c : cols)
    for (SparseRowMatrix::InnerIterator it(factor_, c); it; ++it)
      if (local[static_cast<std::size_t>(it.col())] < 0) {
        local[static_cast<std::size_t>(it.col())] = static_cast<Index>(used.size());
        used.push_back(it.col());
      }
  const Index width = static_cast<Index>(used.size());
  MatrixXd fc = MatrixXd::Zero(static_cast<Index>(cols.size()), width);
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (SparseRowMatrix::InnerIterator it(factor_, cols[j]); it; ++it)
      fc(static_cast<Index>(j), local[static_cast<std::size_t>(it.col())]) = it.value();
  MatrixXd fr = MatrixXd::Zero(static_cast<Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (SparseRowMatrix::InnerIterator it(factor_, rows[i]); it; ++it) {
      const Index l = local[static_cast<std::size_t>(it.col())];
      if (l >= 0) fr(static_cast<Index>(i), l) = it.value();
    }
  return fr * fc.transpose();
}

MatrixXd FactorPlusCovSource::block(std::span<const Index> rows, std::span<const Index> cols) const {
  MatrixXd out = product(rows, cols);
  if (q_) out += q_->block(rows, cols);
  return out;
}

MatrixXd FactorPlusCovSource::block(Index row_begin, Index row_end, std::span<const Index> cols) const {
  const auto rows = iota_range(row_begin, row_end);
  MatrixXd out = product(rows, cols);
  if (q_) out += q_->block(row_begin, row_end, cols);
  return out;
}

}  // namespace mrflp
