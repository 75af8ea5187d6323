#include "mrflp/blocksparse.hpp"

#include "mrflp/kernels.hpp"

#include <Eigen/Cholesky>

#include <fstream>
#include <sstream>

namespace mrflp {

namespace {

// Regions in column order: finest level first, lexicographic within a level.
std::vector<int> column_order(const MultiResPartition& p) {
  std::vector<int> order;
  order.reserve(p.regions().size());
  for (int m = p.levels(); m >= 0; --m)
    for (int id : p.level_regions(m)) order.push_back(id);
  return order;
}

bool nested(const Region& a, const Region& b) {
  return (a.begin <= b.begin && b.end <= a.end) || (b.begin <= a.begin && a.end <= b.end);
}

}  // namespace

BlockFactor::BlockFactor(PartitionPtr partition) : partition_(std::move(partition)) {
  blocks_.reserve(partition_->regions().size());
  for (const auto& r : partition_->regions()) blocks_.push_back(MatrixXd::Zero(r.size(), r.rank));
}

Index BlockFactor::rows() const { return partition_ ? partition_->n() : 0; }
Index BlockFactor::cols() const { return partition_ ? partition_->num_columns() : 0; }

VectorXd BlockFactor::multiply(const VectorXd& v) const {
  if (v.size() != cols()) throw Error("BlockFactor::multiply: dimension mismatch");
  VectorXd out = VectorXd::Zero(rows());
  for (std::size_t id = 0; id < blocks_.size(); ++id) {
    const Region& r = partition_->region(static_cast<int>(id));
    out.segment(r.begin, r.size()).noalias() += blocks_[id] * v.segment(r.col_offset, r.rank);
  }
  return out;
}

VectorXd BlockFactor::multiply_transpose(const VectorXd& x) const {
  if (x.size() != rows()) throw Error("BlockFactor::multiply_transpose: dimension mismatch");
  VectorXd out(cols());
  for (std::size_t id = 0; id < blocks_.size(); ++id) {
    const Region& r = partition_->region(static_cast<int>(id));
    out.segment(r.col_offset, r.rank).noalias() = blocks_[id].transpose() * x.segment(r.begin, r.size());
  }
  return out;
}

SparseRowMatrix BlockFactor::to_sparse() const {
  std::vector<Eigen::Triplet<double, Index>> trips;
  for (std::size_t id = 0; id < blocks_.size(); ++id) {
    const Region& r = partition_->region(static_cast<int>(id));
    for (Index c = 0; c < r.rank; ++c)
      for (Index i = 0; i < r.size(); ++i) trips.emplace_back(r.begin + i, r.col_offset + c, blocks_[id](i, c));
  }
  SparseRowMatrix s(rows(), cols());
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

MatrixXd BlockFactor::to_dense() const {
  MatrixXd d = MatrixXd::Zero(rows(), cols());
  for (std::size_t id = 0; id < blocks_.size(); ++id) {
    const Region& r = partition_->region(static_cast<int>(id));
    d.block(r.begin, r.col_offset, r.size(), r.rank) = blocks_[id];
  }
  return d;
}

BlockEnvelope::BlockEnvelope(PartitionPtr partition, Kind kind) : partition_(std::move(partition)), kind_(kind) {
  const auto& regs = partition_->regions();
  blocks_.resize(regs.size());
  for (std::size_t a = 0; a < regs.size(); ++a) {
    const auto chain = partition_->ancestry(static_cast<int>(a));
    for (int p : chain) blocks_[a].push_back(MatrixXd::Zero(regs[static_cast<std::size_t>(p)].rank, regs[a].rank));
  }
}

Index BlockEnvelope::size() const { return partition_ ? partition_->num_columns() : 0; }

MatrixXd BlockEnvelope::to_dense() const {
  MatrixXd d = MatrixXd::Zero(size(), size());
  for (std::size_t a = 0; a < blocks_.size(); ++a) {
    const Region& ra = partition_->region(static_cast<int>(a));
    const auto chain = partition_->ancestry(static_cast<int>(a));
    for (std::size_t k = 0; k < chain.size(); ++k) {
      const Region& rp = partition_->region(chain[k]);
      const MatrixXd& blk = blocks_[a][k];
      if (k == 0) {
        if (kind_ == Kind::Lower)
          d.block(ra.col_offset, ra.col_offset, ra.rank, ra.rank) = blk.triangularView<Eigen::Lower>();
        else
          d.block(ra.col_offset, ra.col_offset, ra.rank, ra.rank) = blk;
        continue;
      }
      d.block(rp.col_offset, ra.col_offset, rp.rank, ra.rank) = blk;
      if (kind_ == Kind::Symmetric) d.block(ra.col_offset, rp.col_offset, ra.rank, rp.rank) = blk.transpose();
    }
  }
  return d;
}

Index BlockEnvelope::stored_entries() const {
  Index total = 0;
  for (std::size_t a = 0; a < blocks_.size(); ++a)
    for (std::size_t k = 0; k < blocks_[a].size(); ++k) {
      const Index r = blocks_[a][k].cols();
      if (k == 0 && kind_ == Kind::Lower)
        total += r * (r + 1) / 2;
      else
        total += blocks_[a][k].size();
    }
  return total;
}

BlockGram gram_plus_identity(const BlockFactor& b, const VectorXd& weights) {
  const auto& part = b.partition();
  if (weights.size() != b.rows()) throw Error("gram_plus_identity: weight vector has the wrong length");
  for (Index i = 0; i < weights.size(); ++i)
    if (!(weights[i] >= 0.0)) throw Error("gram_plus_identity: negative weight at site " + std::to_string(i));
  BlockGram g(part, BlockEnvelope::Kind::Symmetric);
  for (std::size_t a = 0; a < part->regions().size(); ++a) {
    const Region& ra = part->region(static_cast<int>(a));
    const MatrixXd& ba = b.block(static_cast<int>(a));
    const auto chain = part->ancestry(static_cast<int>(a));
    const double* w = weights.data() + ra.begin;
    for (std::size_t k = 0; k < chain.size(); ++k) {
      const Region& rp = part->region(chain[k]);
      const MatrixXd& bp = b.block(chain[k]);
      MatrixXd& c = g.block(static_cast<int>(a), static_cast<int>(k));
      if (ra.size() > 0)
        kernels::weighted_gram(static_cast<std::size_t>(ra.size()), static_cast<std::size_t>(rp.rank),
                               static_cast<std::size_t>(ra.rank), bp.data() + (ra.begin - rp.begin),
                               static_cast<std::size_t>(bp.rows()), w, ba.data(), static_cast<std::size_t>(ba.rows()),
                               c.data(), static_cast<std::size_t>(c.rows()));
      if (k == 0) c.diagonal().array() += 1.0;
    }
  }
  return g;
}

BlockTriangular structured_cholesky(const BlockGram& lambda) {
  const auto& part = lambda.partition();
  BlockEnvelope s = lambda;  // Schur-complement workspace
  BlockTriangular l(part, BlockEnvelope::Kind::Lower);
  for (int a : column_order(*part)) {
    const auto chain = part->ancestry(a);
    Eigen::LLT<MatrixXd> llt(s.block(a, 0));
    if (llt.info() != Eigen::Success)
      throw NotPositiveDefiniteError("structured_cholesky: non-positive pivot in region " +
                                     path_string(part->region(a).path));
    l.block(a, 0) = llt.matrixL();
    const MatrixXd& laa = l.block(a, 0);
    for (std::size_t k = 1; k < chain.size(); ++k) {
      MatrixXd x = s.block(a, static_cast<int>(k));
      laa.transpose().triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(x);
      l.block(a, static_cast<int>(k)) = std::move(x);
    }
    for (std::size_t j = 1; j < chain.size(); ++j)
      for (std::size_t k = j; k < chain.size(); ++k)
        s.block(chain[j], static_cast<int>(k - j)).noalias() -=
            l.block(a, static_cast<int>(k)) * l.block(a, static_cast<int>(j)).transpose();
  }
  return l;
}

BlockTriangular invert_lower_triangular(const BlockTriangular& l) {
  const auto& part = l.partition();
  BlockTriangular x(part, BlockEnvelope::Kind::Lower);
  for (std::size_t a = 0; a < part->regions().size(); ++a) {
    const int ia = static_cast<int>(a);
    const auto chain = part->ancestry(ia);
    const MatrixXd& laa = l.block(ia, 0);
    for (Index i = 0; i < laa.rows(); ++i)
      if (laa(i, i) == 0.0)
        throw Error("invert_lower_triangular: zero diagonal in region " + path_string(part->region(ia).path));
    x.block(ia, 0) = laa.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(laa.rows(), laa.cols()));
    for (std::size_t j = 1; j < chain.size(); ++j) {
      MatrixXd acc = MatrixXd::Zero(part->region(chain[j]).rank, part->region(ia).rank);
      for (std::size_t i = 0; i < j; ++i)
        acc.noalias() += l.block(chain[i], static_cast<int>(j - i)) * x.block(ia, static_cast<int>(i));
      l.block(chain[j], 0).triangularView<Eigen::Lower>().solveInPlace(acc);
      x.block(ia, static_cast<int>(j)) = -acc;
    }
  }
  return x;
}

BlockFactor factor_postmultiply(const BlockFactor& b, const BlockTriangular& x) {
  const auto& part = b.partition();
  if (x.size() != b.cols()) throw Error("factor_postmultiply: dimension mismatch");
  BlockFactor out(part);
  for (std::size_t q = 0; q < part->regions().size(); ++q) {
    const int iq = static_cast<int>(q);
    const Region& rq = part->region(iq);
    const auto chain = part->ancestry(iq);
    for (std::size_t k = 0; k < chain.size(); ++k) {
      const Region& ra = part->region(chain[k]);
      out.block(chain[k]).middleRows(rq.begin - ra.begin, rq.size()).noalias() +=
          b.block(iq) * x.block(iq, static_cast<int>(k)).transpose();
    }
  }
  return out;
}

SparseRowMatrix sparse_times_factor(const SparseRowMatrix& a, const BlockFactor& b) {
  if (a.cols() != b.rows()) throw Error("sparse_times_factor: dimension mismatch");
  const SparseRowMatrix bs = b.to_sparse();
  SparseRowMatrix out = a * bs;
  out.makeCompressed();
  return out;
}

BlockFactor factor_from_dense(PartitionPtr partition, const MatrixXd& dense) {
  if (dense.rows() != partition->n() || dense.cols() != partition->num_columns())
    throw Error("factor_from_dense: dimension mismatch");
  const auto report = structure_check(dense, *partition, Pattern::Factor);
  if (!report.ok) throw Error("factor_from_dense: " + report.describe());
  BlockFactor f(partition);
  for (std::size_t id = 0; id < partition->regions().size(); ++id) {
    const Region& r = partition->region(static_cast<int>(id));
    f.block(static_cast<int>(id)) = dense.block(r.begin, r.col_offset, r.size(), r.rank);
  }
  return f;
}

bool factor_admissible(const MultiResPartition& p, Index row, Index col) {
  const Region& r = p.region(p.column_owner(col));
  return r.begin <= row && row < r.end;
}

bool gram_admissible(const MultiResPartition& p, Index row, Index col) {
  return nested(p.region(p.column_owner(row)), p.region(p.column_owner(col)));
}

bool lower_admissible(const MultiResPartition& p, Index row, Index col) {
  return row >= col && gram_admissible(p, row, col);
}

std::string StructureReport::describe() const {
  std::ostringstream os;
  if (ok)
    os << clause << ": ok (" << nonzeros << " nonzeros, envelope " << envelope_entries << ")";
  else
    os << clause << ": nonzero " << value << " at (" << row << ", " << col << ") outside the envelope";
  return os.str();
}

StructureReport structure_check(const MatrixXd& m, const MultiResPartition& p, Pattern pattern) {
  StructureReport rep;
  switch (pattern) {
    case Pattern::Factor:
      rep.clause = "factor";
      if (m.rows() != p.n() || m.cols() != p.num_columns()) throw Error("structure_check: factor shape mismatch");
      break;
    case Pattern::Gram:
      rep.clause = "gram";
      break;
    case Pattern::Lower:
      rep.clause = "lower";
      break;
  }
  if (pattern != Pattern::Factor && (m.rows() != p.num_columns() || m.cols() != p.num_columns()))
    throw Error("structure_check: square envelope shape mismatch");
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) {
      bool admissible = false;
      switch (pattern) {
        case Pattern::Factor:
          admissible = factor_admissible(p, i, j);
          break;
        case Pattern::Gram:
          admissible = gram_admissible(p, i, j);
          break;
        case Pattern::Lower:
          admissible = lower_admissible(p, i, j);
          break;
      }
      const double v = m(i, j);
      if (admissible) ++rep.envelope_entries;
      if (v != 0.0) {
        ++rep.nonzeros;
        if (!admissible && rep.ok) {
          rep.ok = false;
          rep.row = i;
          rep.col = j;
          rep.value = v;
        }
      }
    }
  return rep;
}

StructureReport structure_check(const BlockFactor& b) {
  return structure_check(b.to_dense(), *b.partition(), Pattern::Factor);
}

StructureReport structure_check(const BlockEnvelope& m) {
  return structure_check(m.to_dense(), *m.partition(),
                         m.kind() == BlockEnvelope::Kind::Lower ? Pattern::Lower : Pattern::Gram);
}

void write_pattern_csv(const MatrixXd& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << "row,col\n";
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (m(i, j) != 0.0) os << i << "," << j << "\n";
}

}  // namespace mrflp
