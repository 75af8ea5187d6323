#pragma once

#include "mrflp/partition.hpp"
#include "mrflp/types.hpp"

#include <string>
#include <vector>

namespace mrflp {

/// Tall n x N' factor whose column block for region a is nonzero only on the
/// rows of I_a. Stored as one dense |I_a| x r'_a block per region.
class BlockFactor {
 public:
  BlockFactor() = default;
  explicit BlockFactor(PartitionPtr partition);

  const PartitionPtr& partition() const { return partition_; }
  Index rows() const;
  Index cols() const;
  MatrixXd& block(int region) { return blocks_[static_cast<std::size_t>(region)]; }
  const MatrixXd& block(int region) const { return blocks_[static_cast<std::size_t>(region)]; }

  /// B v for v of length N'.
  VectorXd multiply(const VectorXd& v) const;
  /// B^T x for x of length n.
  VectorXd multiply_transpose(const VectorXd& x) const;
  /// Structural sparse copy (every stored block entry kept, even exact zeros).
  SparseRowMatrix to_sparse() const;
  MatrixXd to_dense() const;

 private:
  PartitionPtr partition_;
  std::vector<MatrixXd> blocks_;
};

/// Square N' x N' block matrix on the ancestor envelope: block (p, a) may be
/// nonzero only when p is a or an ancestor of a. Lower blocks are stored;
/// blocks_[a][k] is block (k-th ancestor of a, a), k = 0 being the diagonal.
class BlockEnvelope {
 public:
  enum class Kind { Symmetric, Lower };

  BlockEnvelope() = default;
  BlockEnvelope(PartitionPtr partition, Kind kind);

  const PartitionPtr& partition() const { return partition_; }
  Kind kind() const { return kind_; }
  Index size() const;
  MatrixXd& block(int region, int k) { return blocks_[static_cast<std::size_t>(region)][static_cast<std::size_t>(k)]; }
  const MatrixXd& block(int region, int k) const {
    return blocks_[static_cast<std::size_t>(region)][static_cast<std::size_t>(k)];
  }
  int depth(int region) const { return static_cast<int>(blocks_[static_cast<std::size_t>(region)].size()); }

  /// Dense copy; symmetric kinds are mirrored, lower kinds keep zeros above the diagonal.
  MatrixXd to_dense() const;
  /// Stored entries, counting only the lower triangle of diagonal blocks for Lower kinds.
  Index stored_entries() const;

 private:
  PartitionPtr partition_;
  Kind kind_ = Kind::Symmetric;
  std::vector<std::vector<MatrixXd>> blocks_;
};

using BlockGram = BlockEnvelope;
using BlockTriangular = BlockEnvelope;

/// I + B^T diag(w) B, w >= 0 over the n (ordered) sites.
BlockGram gram_plus_identity(const BlockFactor& b, const VectorXd& weights);

/// Block Cholesky factor L of an envelope-structured SPD matrix, eliminating
/// finest regions first. No fill outside the envelope.
BlockTriangular structured_cholesky(const BlockGram& lambda);

/// L^{-1} on the same envelope.
BlockTriangular invert_lower_triangular(const BlockTriangular& l);

/// B X^T for X lower-triangular on the envelope (X = L^{-1} gives B L^{-T}).
BlockFactor factor_postmultiply(const BlockFactor& b, const BlockTriangular& x);

/// A B as an n x N' sparse matrix.
SparseRowMatrix sparse_times_factor(const SparseRowMatrix& a, const BlockFactor& b);

/// Builds a BlockFactor from a dense or sparse n x N' matrix, rejecting any
/// nonzero outside the factor envelope.
BlockFactor factor_from_dense(PartitionPtr partition, const MatrixXd& dense);

// Analytic envelopes in ordered index / column space.
bool factor_admissible(const MultiResPartition& p, Index row, Index col);
bool gram_admissible(const MultiResPartition& p, Index row, Index col);
bool lower_admissible(const MultiResPartition& p, Index row, Index col);

enum class Pattern { Factor, Gram, Lower };

struct StructureReport {
  bool ok = true;
  std::string clause;
  Index row = -1;
  Index col = -1;
  double value = 0.0;
  Index nonzeros = 0;          // numerically nonzero entries seen
  Index envelope_entries = 0;  // size of the admissible set

  std::string describe() const;
};

/// Audits a dense matrix against an analytic pattern: every entry outside the
/// envelope must be exactly zero. The first violation (column-major order) is reported.
StructureReport structure_check(const MatrixXd& m, const MultiResPartition& p, Pattern pattern);
StructureReport structure_check(const BlockFactor& b);
StructureReport structure_check(const BlockEnvelope& m);

/// Coordinate list "row,col" of the nonzero entries, for plotting.
void write_pattern_csv(const MatrixXd& m, const std::string& path);

}  // namespace mrflp
