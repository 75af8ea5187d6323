#include "mrflp/covariance.hpp"
#include "mrflp/mralp.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <random>

using namespace mrflp;

namespace {

MatrixXd random_psd(Index n, Index rank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  MatrixXd g(n, rank);
  for (Index i = 0; i < g.size(); ++i) g.data()[i] = z(rng);
  return g * g.transpose() / static_cast<double>(rank) + 0.05 * MatrixXd::Identity(n, n);
}

KernelCovSource ordered_kernel(const PartitionPtr& p, CovFamily f = CovFamily::Exponential) {
  return KernelCovSource(p->ordered_points(), {f, 1.0, 0.15});
}

}  // namespace

TEST(SelectPhi, IdentityGivesOrthonormalRows) {
  const ProjectionBasis b = select_phi(MatrixXd::Identity(3, 3), 2);
  EXPECT_NEAR(b.eigvals[0], 1.0, 1e-14);
  EXPECT_NEAR(b.eigvals[1], 1.0, 1e-14);
  EXPECT_TRUE((b.phi * b.phi.transpose()).isIdentity(1e-14));
}

TEST(SelectPhi, DiagonalPicksLeadingAxes) {
  const VectorXd diag = (VectorXd(3) << 4, 1, 0.25).finished();
  const ProjectionBasis b = select_phi(diag.asDiagonal().toDenseMatrix(), 2);
  EXPECT_NEAR(b.eigvals[0], 4.0, 1e-14);
  EXPECT_NEAR(b.eigvals[1], 1.0, 1e-14);
  EXPECT_NEAR(std::abs(b.phi(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(b.phi(1, 1)), 1.0, 1e-14);
}

TEST(SelectPhi, FullRankPreservesTrace) {
  const MatrixXd v = random_psd(6, 6, 3);
  const ProjectionBasis b = select_phi(v, 6);
  EXPECT_NEAR((b.phi * v * b.phi.transpose()).trace(), v.trace(), 1e-10);
}

TEST(SelectPhi, RankDeficiency) {
  MatrixXd v = MatrixXd::Zero(3, 3);
  v(0, 0) = 1.0;
  EXPECT_THROW(select_phi(v, 2), RankDeficiencyError);
  EXPECT_THROW(select_phi(MatrixXd::Identity(3, 3), 4), Error);
}

TEST(Decompose, FullKnotsSingleLevelIsExact) {
  const auto p = build_partition(GridSpec::regular_square(8, 8), PartitionConfig::uniform(0, 2, 64, 64, 1));
  const auto src = ordered_kernel(p);
  const MatrixXd sigma = src.dense();
  const Decomposition d = decompose(src, p);
  EXPECT_LT((reconstruct(d.factor) - sigma).norm() / sigma.norm(), 1e-8);
  const NaiveDecomposition nd = naive_decompose(sigma, p);
  EXPECT_LT((nd.factor.to_dense() - d.factor.to_dense()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Decompose, IdentityBasisMatchesNaive) {
  const auto p = build_partition(GridSpec::regular_square(16, 16), PartitionConfig::uniform(2, 2, 10, 10, 5));
  const auto src = ordered_kernel(p);
  DecomposeOptions opts;
  opts.mode = BasisMode::Identity;
  const Decomposition d = decompose(src, p, opts);
  const NaiveDecomposition nd = naive_decompose(src.dense(), p, opts);
  EXPECT_LT((nd.factor.to_dense() - d.factor.to_dense()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Decompose, ProjectedMatchesNaiveOnRandomPsd) {
  const auto p = build_partition(GridSpec::regular_square(10, 10), PartitionConfig::uniform(1, 2, 12, 6, 2));
  const MatrixXd sigma = random_psd(100, 30, 9);
  const DenseCovSource src(sigma);
  const Decomposition d = decompose(src, p);
  const NaiveDecomposition nd = naive_decompose(sigma, p, {}, &d.basis);
  EXPECT_LT((nd.factor.to_dense() - d.factor.to_dense()).cwiseAbs().maxCoeff(), 1e-8);
  // the projection terms summed over levels reproduce B B^T
  EXPECT_LT((nd.projection_sum - reconstruct(d.factor)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Decompose, VarianceNeverIncreases) {
  const auto p = build_partition(GridSpec::regular_square(34, 34), PartitionConfig::uniform(2, 2, 50, 10, 1));
  const auto src = ordered_kernel(p, CovFamily::Matern15);
  const MatrixXd r = reconstruct(decompose(src, p).factor);
  EXPECT_EQ(r, r.transpose());
  EXPECT_LE((r.diagonal().array() - 1.0).maxCoeff(), 1e-8);
}

TEST(Decompose, Figure1FactorShape) {
  const auto p = build_partition(GridSpec::regular_square(34, 34), PartitionConfig::uniform(2, 2, 50, 10, 1));
  const BlockFactor b = decompose(ordered_kernel(p), p).factor;
  EXPECT_EQ(b.cols(), 70);
  const SparseRowMatrix s = b.to_sparse();
  for (Index i = 0; i < s.rows(); ++i) EXPECT_LE(s.row(i).nonZeros(), 30);
  EXPECT_TRUE(structure_check(b).ok);
}

TEST(Decompose, SingleLevelRankBound) {
  const auto p = build_partition(GridSpec::regular_square(8, 8), PartitionConfig::uniform(0, 2, 12, 4, 1));
  const MatrixXd r = reconstruct(decompose(ordered_kernel(p), p).factor);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(r);
  int positive = 0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) positive += es.eigenvalues()[i] > 1e-10 ? 1 : 0;
  EXPECT_LE(positive, 4);
}

TEST(Decompose, RankDeficientKnotBlockIsReported) {
  const auto p = build_partition(GridSpec::regular_square(6, 6), PartitionConfig::uniform(0, 2, 10, 8, 1));
  const DenseCovSource src(MatrixXd::Ones(36, 36));
  EXPECT_THROW(decompose(src, p), RankDeficiencyError);
}
