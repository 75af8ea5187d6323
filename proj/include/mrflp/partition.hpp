#pragma once

#include "mrflp/types.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mrflp {

enum class Geometry { UnitSquare, UnitCircle };

/// State grid. Planar grids live in [0,1]^2; circle grids carry an angle per
/// point in [0, 2*pi) and store the embedding (cos, sin) as the coordinate,
/// so covariance distances on the circle are chord lengths.
struct GridSpec {
  Geometry geometry = Geometry::UnitSquare;
  std::vector<Point2> points;
  std::vector<double> angles;  // circle only
  int nx = 0;                  // regular planar grid: columns (s1 direction)
  int ny = 0;                  // regular planar grid: rows (s2 direction)

  Index size() const { return static_cast<Index>(points.size()); }
  bool is_regular() const { return geometry == Geometry::UnitSquare && nx > 0 && ny > 0; }

  /// nx * ny points at ((c+1)/(nx+1), (r+1)/(ny+1)); index = r * nx + c.
  static GridSpec regular_square(int nx, int ny);
  /// n points at angles 2*pi*(i + 0.5)/n.
  static GridSpec circle(int n);
  static GridSpec scattered(std::vector<Point2> points);

  /// Throws if points are non-finite, duplicated or outside the domain.
  void validate() const;
};

struct PartitionConfig {
  int levels = 0;                // M
  std::vector<int> branching;    // J_1..J_M
  std::vector<int> knots;        // r_0..r_M
  std::vector<int> ranks;        // r'_0..r'_M
  std::uint64_t seed = 0;

  /// Uniform settings: same J, r, r' at every level.
  static PartitionConfig uniform(int levels, int branching, int knots, int ranks, std::uint64_t seed);
};

struct Region {
  std::vector<int> path;  // (j_1..j_m), 1-based
  int level = 0;
  int parent = -1;
  std::vector<int> children;
  Index begin = 0;  // ordered index range [begin, end)
  Index end = 0;
  std::vector<Index> knots;  // ordered indices, ascending
  int rank = 0;              // r'
  Index col_offset = 0;      // first column of this region's block in B

  Index size() const { return end - begin; }
  int num_knots() const { return static_cast<int>(knots.size()); }
};

/// Recursive domain partition with its knot sets and the grid permutation
/// that makes every index set a contiguous range ordered lexicographically
/// by leaf path. Immutable after construction.
class MultiResPartition {
 public:
  MultiResPartition(GridSpec grid, PartitionConfig config, std::vector<Region> regions,
                    std::vector<Index> to_ordered);

  const GridSpec& grid() const { return grid_; }
  const PartitionConfig& config() const { return config_; }
  int levels() const { return config_.levels; }
  Index n() const { return static_cast<Index>(to_ordered_.size()); }
  /// N': total number of columns of a block factor.
  Index num_columns() const { return num_columns_; }
  /// N: number of columns touched by a single row (sum of r' along a path).
  Index path_width() const { return path_width_; }

  /// Regions in level-major order; lexicographic by path within a level. Root is 0.
  const std::vector<Region>& regions() const { return regions_; }
  const Region& region(int id) const { return regions_[static_cast<std::size_t>(id)]; }
  std::span<const int> level_regions(int level) const;
  /// Leaf region containing an ordered index.
  int leaf_of(Index ordered) const { return leaf_of_[static_cast<std::size_t>(ordered)]; }
  /// Region ids from `id` up to the root, `id` first.
  std::vector<int> ancestry(int id) const;
  /// Region owning a column of the block factor.
  int column_owner(Index col) const { return column_owner_[static_cast<std::size_t>(col)]; }

  /// original index -> ordered index
  const std::vector<Index>& to_ordered() const { return to_ordered_; }
  /// ordered index -> original index
  const std::vector<Index>& to_original() const { return to_original_; }
  /// Grid points in ordered index order.
  const std::vector<Point2>& ordered_points() const { return ordered_points_; }

  /// Human-readable one-line-per-region summary: path, |I|, r, r'.
  std::string summary() const;

 private:
  GridSpec grid_;
  PartitionConfig config_;
  std::vector<Region> regions_;
  std::vector<std::vector<int>> by_level_;
  std::vector<int> leaf_of_;
  std::vector<int> column_owner_;
  std::vector<Index> to_ordered_;
  std::vector<Index> to_original_;
  std::vector<Point2> ordered_points_;
  Index num_columns_ = 0;
  Index path_width_ = 0;
};

using PartitionPtr = std::shared_ptr<const MultiResPartition>;

PartitionPtr build_partition(const GridSpec& grid, const PartitionConfig& config);

std::string path_string(const std::vector<int>& path);

// Permutation helpers. `forward` maps original vectors/matrices into ordered
// index space; `inverse` maps back.
VectorXd to_ordered(const MultiResPartition& p, const VectorXd& original);
VectorXd to_original(const MultiResPartition& p, const VectorXd& ordered);
MatrixXd to_ordered(const MultiResPartition& p, const MatrixXd& original);
MatrixXd to_original(const MultiResPartition& p, const MatrixXd& ordered);
SparseRowMatrix to_ordered(const MultiResPartition& p, const SparseRowMatrix& original);

/// Two-column CSV "old_index,new_index" (0-based).
void write_permutation_csv(const MultiResPartition& p, const std::string& path);

}  // namespace mrflp
