#pragma once

#include "mrflp/blocksparse.hpp"
#include "mrflp/cov_source.hpp"
#include "mrflp/partition.hpp"

#include <optional>
#include <vector>

namespace mrflp {

/// Top-r' eigenpairs of a symmetric r x r matrix.
struct ProjectionBasis {
  MatrixXd phi;      // r' x r, orthonormal rows
  VectorXd eigvals;  // descending, > 0
};

/// Throws RankDeficiencyError when lambda_{r'} <= rel_tol * lambda_1.
ProjectionBasis select_phi(const MatrixXd& v, int r_prime, double rel_tol = 1e-10);

enum class BasisMode {
  Eigen,     // projected: S = Phi^T diag(lambda^{-1/2})
  Identity,  // unprojected (r' = r): S = L^{-T} with V = L L^T
};

struct DecomposeOptions {
  BasisMode mode = BasisMode::Eigen;
  double rank_tol = 1e-10;
};

/// Per-region right multiplier S with B_region = W S.
struct RegionBasis {
  MatrixXd right;    // r x r'
  MatrixXd phi;      // eigen mode only
  VectorXd eigvals;  // eigen mode only
};

struct Decomposition {
  BlockFactor factor;
  std::vector<RegionBasis> basis;
};

/// Multi-resolution approximation Sigma ~ B B^T by recursive projection of the
/// knot covariances. `src` must be indexed in the partition's ordered space.
Decomposition decompose(const CovSource& src, const PartitionPtr& partition, const DecomposeOptions& options = {});

struct NaiveDecomposition {
  BlockFactor factor;
  MatrixXd projection_sum;  // sum over levels of the removed projection terms
  std::vector<RegionBasis> basis;
};

/// Reference implementation that carries the full residual covariance matrix
/// from level to level. `fixed_basis`, when given, supplies the right
/// multipliers so that the output can be compared entrywise with decompose().
NaiveDecomposition naive_decompose(const MatrixXd& sigma, const PartitionPtr& partition,
                                   const DecomposeOptions& options = {},
                                   const std::vector<RegionBasis>* fixed_basis = nullptr);

/// B B^T.
MatrixXd reconstruct(const BlockFactor& b);

}  // namespace mrflp
