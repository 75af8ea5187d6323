#include "mrflp/mralp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace mrflp {

namespace {

RegionBasis make_basis(const MatrixXd& w_knots, const Region& region, const DecomposeOptions& options) {
  const MatrixXd v = 0.5 * (w_knots + w_knots.transpose());
  RegionBasis basis;
  try {
    if (options.mode == BasisMode::Identity) {
      if (region.rank != region.num_knots())
        throw Error("identity basis needs r' = r (r=" + std::to_string(region.num_knots()) +
                    ", r'=" + std::to_string(region.rank) + ")");
      Eigen::LLT<MatrixXd> llt(v);
      if (llt.info() != Eigen::Success) throw RankDeficiencyError("knot covariance is not positive definite");
      const MatrixXd l = llt.matrixL();
      basis.right = l.transpose().triangularView<Eigen::Upper>().solve(MatrixXd::Identity(v.rows(), v.cols()));
    } else {
      ProjectionBasis pb = select_phi(v, region.rank, options.rank_tol);
      basis.right = pb.phi.transpose() * pb.eigvals.cwiseInverse().cwiseSqrt().asDiagonal();
      basis.phi = std::move(pb.phi);
      basis.eigvals = std::move(pb.eigvals);
    }
  } catch (const RankDeficiencyError& e) {
    throw RankDeficiencyError("region " + path_string(region.path) + ": " + e.what());
  } catch (const Error& e) {
    throw Error("region " + path_string(region.path) + ": " + e.what());
  }
  return basis;
}

std::vector<Index> local_knots(const Region& r) {
  std::vector<Index> k(r.knots.size());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = r.knots[i] - r.begin;
  return k;
}

}  // namespace

ProjectionBasis select_phi(const MatrixXd& v, int r_prime, double rel_tol) {
  if (v.rows() != v.cols()) throw Error("select_phi: matrix must be square");
  if (r_prime < 1 || r_prime > v.rows()) throw Error("select_phi: need 1 <= r' <= r");
  const MatrixXd sym = 0.5 * (v + v.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw Error("select_phi: eigen decomposition failed");
  const Index r = sym.rows();
  ProjectionBasis out;
  out.phi.resize(r_prime, r);
  out.eigvals.resize(r_prime);
  for (int i = 0; i < r_prime; ++i) {
    out.eigvals[i] = es.eigenvalues()[r - 1 - i];
    out.phi.row(i) = es.eigenvectors().col(r - 1 - i).transpose();
  }
  const double lead = out.eigvals[0];
  const double last = out.eigvals[r_prime - 1];
  if (!(lead > 0.0) || !(last > rel_tol * lead))
    throw RankDeficiencyError("projected eigenvalue " + std::to_string(r_prime) + " is " + std::to_string(last) +
                              " against leading " + std::to_string(lead));
  return out;
}

Decomposition decompose(const CovSource& src, const PartitionPtr& partition, const DecomposeOptions& options) {
  if (src.size() != partition->n()) throw Error("decompose: covariance size does not match partition");
  Decomposition out{BlockFactor(partition), std::vector<RegionBasis>(partition->regions().size())};
  for (int m = 0; m <= partition->levels(); ++m) {
    for (int id : partition->level_regions(m)) {
      const Region& reg = partition->region(id);
      MatrixXd w = src.block(reg.begin, reg.end, std::span<const Index>(reg.knots));
      const auto kl = local_knots(reg);
      // peel off every coarser projection along the path
      for (int p = reg.parent; p >= 0; p = partition->region(p).parent) {
        const Region& rp = partition->region(p);
        const MatrixXd& bp = out.factor.block(p);
        MatrixXd bk(reg.num_knots(), rp.rank);
        for (std::size_t i = 0; i < kl.size(); ++i) bk.row(static_cast<Index>(i)) = bp.row(reg.knots[i] - rp.begin);
        w.noalias() -= bp.middleRows(reg.begin - rp.begin, reg.size()) * bk.transpose();
      }
      MatrixXd v(reg.num_knots(), reg.num_knots());
      for (std::size_t i = 0; i < kl.size(); ++i) v.row(static_cast<Index>(i)) = w.row(kl[i]);
      out.basis[static_cast<std::size_t>(id)] = make_basis(v, reg, options);
      out.factor.block(id).noalias() = w * out.basis[static_cast<std::size_t>(id)].right;
    }
  }
  return out;
}

NaiveDecomposition naive_decompose(const MatrixXd& sigma, const PartitionPtr& partition,
                                   const DecomposeOptions& options, const std::vector<RegionBasis>* fixed_basis) {
  const Index n = partition->n();
  if (sigma.rows() != n || sigma.cols() != n) throw Error("naive_decompose: covariance size mismatch");
  NaiveDecomposition out{BlockFactor(partition), MatrixXd::Zero(n, n),
                         std::vector<RegionBasis>(partition->regions().size())};
  MatrixXd current = sigma;
  for (int m = 0; m <= partition->levels(); ++m) {
    MatrixXd removed = MatrixXd::Zero(n, n);
    for (int id : partition->level_regions(m)) {
      const Region& reg = partition->region(id);
      MatrixXd w(reg.size(), reg.num_knots());
      for (int j = 0; j < reg.num_knots(); ++j)
        w.col(j) = current.col(reg.knots[static_cast<std::size_t>(j)]).segment(reg.begin, reg.size());
      RegionBasis basis;
      if (fixed_basis) {
        basis = (*fixed_basis)[static_cast<std::size_t>(id)];
      } else {
        MatrixXd v(reg.num_knots(), reg.num_knots());
        for (int i = 0; i < reg.num_knots(); ++i) v.row(i) = w.row(reg.knots[static_cast<std::size_t>(i)] - reg.begin);
        basis = make_basis(v, reg, options);
      }
      const MatrixXd b = w * basis.right;
      out.factor.block(id) = b;
      removed.block(reg.begin, reg.begin, reg.size(), reg.size()) = b * b.transpose();
      out.basis[static_cast<std::size_t>(id)] = std::move(basis);
    }
    current -= removed;
    out.projection_sum += removed;
  }
  return out;
}

MatrixXd reconstruct(const BlockFactor& b) {
  const MatrixXd d = b.to_dense();
  MatrixXd out = d * d.transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace mrflp
