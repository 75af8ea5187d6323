#include "mrflp/partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <utility>

namespace mrflp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Keyed by (seed, path) only, so a region's knots do not depend on the
// order in which regions are visited.
std::uint64_t region_key(std::uint64_t seed, const std::vector<int>& path) {
  std::uint64_t h = splitmix64(seed ^ 0x6D72666C70ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(path.size()));
  for (int j : path) h = splitmix64(h ^ static_cast<std::uint64_t>(j));
  return h;
}

struct Box {
  double lo[2] = {0.0, 0.0};
  double hi[2] = {1.0, 1.0};
};

// Number of interior split points strictly below v: boundary points fall to
// the lower-indexed child.
int child_slot(double v, double lo, double hi, int parts) {
  int slot = 0;
  for (int k = 1; k < parts; ++k) {
    const double b = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(parts);
    if (v > b) slot = k;
  }
  return slot;
}

struct BuildNode {
  Region region;
  Box box;
  std::vector<Index> members;  // original indices
};

}  // namespace

GridSpec GridSpec::regular_square(int nx, int ny) {
  if (nx < 1 || ny < 1) throw Error("regular_square: grid dimensions must be positive");
  GridSpec g;
  g.geometry = Geometry::UnitSquare;
  g.nx = nx;
  g.ny = ny;
  g.points.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int r = 0; r < ny; ++r)
    for (int c = 0; c < nx; ++c)
      g.points.push_back({(c + 1.0) / (nx + 1.0), (r + 1.0) / (ny + 1.0)});
  return g;
}

GridSpec GridSpec::circle(int n) {
  if (n < 1) throw Error("circle: need at least one point");
  GridSpec g;
  g.geometry = Geometry::UnitCircle;
  g.points.reserve(static_cast<std::size_t>(n));
  g.angles.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = kTwoPi * (i + 0.5) / n;
    g.angles.push_back(a);
    g.points.push_back({std::cos(a), std::sin(a)});
  }
  return g;
}

GridSpec GridSpec::scattered(std::vector<Point2> points) {
  GridSpec g;
  g.geometry = Geometry::UnitSquare;
  g.points = std::move(points);
  return g;
}

void GridSpec::validate() const {
  if (points.empty()) throw Error("grid has no points");
  if (geometry == Geometry::UnitCircle && angles.size() != points.size())
    throw Error("circle grid needs one angle per point");
  std::set<std::pair<double, double>> seen;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw Error("grid point " + std::to_string(i) + " has a non-finite coordinate");
    if (geometry == Geometry::UnitSquare && (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0))
      throw Error("grid point " + std::to_string(i) + " lies outside the unit square");
    if (geometry == Geometry::UnitCircle && (angles[i] < 0.0 || angles[i] >= kTwoPi))
      throw Error("grid angle " + std::to_string(i) + " outside [0, 2pi)");
    if (!seen.emplace(p.x, p.y).second)
      throw Error("grid point " + std::to_string(i) + " duplicates an earlier point");
  }
}

PartitionConfig PartitionConfig::uniform(int levels, int branching, int knots, int ranks,
                                         std::uint64_t seed) {
  PartitionConfig c;
  c.levels = levels;
  c.branching.assign(static_cast<std::size_t>(std::max(levels, 0)), branching);
  c.knots.assign(static_cast<std::size_t>(std::max(levels, 0) + 1), knots);
  c.ranks.assign(static_cast<std::size_t>(std::max(levels, 0) + 1), ranks);
  c.seed = seed;
  return c;
}

std::string path_string(const std::vector<int>& path) {
  if (path.empty()) return "(0)";
  std::string s = "(";
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(path[i]);
  }
  return s + ")";
}

MultiResPartition::MultiResPartition(GridSpec grid, PartitionConfig config,
                                     std::vector<Region> regions, std::vector<Index> to_ordered)
    : grid_(std::move(grid)),
      config_(std::move(config)),
      regions_(std::move(regions)),
      to_ordered_(std::move(to_ordered)) {
  const Index n = static_cast<Index>(to_ordered_.size());
  to_original_.assign(static_cast<std::size_t>(n), -1);
  for (Index i = 0; i < n; ++i) to_original_[static_cast<std::size_t>(to_ordered_[i])] = i;
  ordered_points_.resize(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k)
    ordered_points_[static_cast<std::size_t>(k)] = grid_.points[static_cast<std::size_t>(to_original_[k])];

  by_level_.assign(static_cast<std::size_t>(config_.levels + 1), {});
  for (std::size_t id = 0; id < regions_.size(); ++id)
    by_level_[static_cast<std::size_t>(regions_[id].level)].push_back(static_cast<int>(id));

  leaf_of_.assign(static_cast<std::size_t>(n), -1);
  for (int id : by_level_.back())
    for (Index k = regions_[id].begin; k < regions_[id].end; ++k) leaf_of_[static_cast<std::size_t>(k)] = id;

  num_columns_ = 0;
  for (const auto& r : regions_) num_columns_ += r.rank;
  column_owner_.assign(static_cast<std::size_t>(num_columns_), -1);
  for (std::size_t id = 0; id < regions_.size(); ++id)
    for (Index c = 0; c < regions_[id].rank; ++c)
      column_owner_[static_cast<std::size_t>(regions_[id].col_offset + c)] = static_cast<int>(id);

  path_width_ = 0;
  for (int id : ancestry(by_level_.back().front())) path_width_ += regions_[id].rank;
}

std::span<const int> MultiResPartition::level_regions(int level) const {
  return by_level_.at(static_cast<std::size_t>(level));
}

std::vector<int> MultiResPartition::ancestry(int id) const {
  std::vector<int> chain;
  for (int a = id; a >= 0; a = regions_[static_cast<std::size_t>(a)].parent) chain.push_back(a);
  return chain;
}

std::string MultiResPartition::summary() const {
  std::ostringstream os;
  os << "n=" << n() << " M=" << levels() << " columns=" << num_columns() << " path_width=" << path_width()
     << "\n";
  for (const auto& r : regions_) {
    os << "level=" << r.level << " path=" << path_string(r.path) << " size=" << r.size()
       << " r=" << r.num_knots() << " r_prime=" << r.rank << " rows=[" << r.begin << "," << r.end
       << ") cols=[" << r.col_offset << "," << r.col_offset + r.rank << ")\n";
  }
  return os.str();
}

PartitionPtr build_partition(const GridSpec& grid, const PartitionConfig& config) {
  grid.validate();
  const int M = config.levels;
  if (M < 0) throw Error("build_partition: levels must be >= 0");
  if (config.branching.size() != static_cast<std::size_t>(M))
    throw Error("build_partition: need one branching factor per level 1..M");
  if (config.knots.size() != static_cast<std::size_t>(M + 1) ||
      config.ranks.size() != static_cast<std::size_t>(M + 1))
    throw Error("build_partition: need knot counts and ranks for levels 0..M");
  for (int J : config.branching)
    if (J < 2) throw Error("build_partition: branching factors must be >= 2");
  for (int m = 0; m <= M; ++m) {
    const int r = config.knots[static_cast<std::size_t>(m)];
    const int rp = config.ranks[static_cast<std::size_t>(m)];
    if (rp < 1 || rp > r)
      throw Error("build_partition: level " + std::to_string(m) + " needs 1 <= r' <= r");
  }

  const Index n = grid.size();
  const bool circle = grid.geometry == Geometry::UnitCircle;

  // Breadth-first split; children are created in parent order, so each level
  // comes out in lexicographic path order.
  std::vector<BuildNode> nodes;
  {
    BuildNode root;
    root.region.level = 0;
    if (circle) {
      root.box.lo[0] = 0.0;
      root.box.hi[0] = kTwoPi;
    }
    root.members.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) root.members[static_cast<std::size_t>(i)] = i;
    nodes.push_back(std::move(root));
  }
  for (std::size_t cursor = 0; cursor < nodes.size(); ++cursor) {
    if (nodes[cursor].region.level == M) continue;
    const int level = nodes[cursor].region.level;
    const int J = config.branching[static_cast<std::size_t>(level)];
    const int axis = circle ? 0 : level % 2;
    const Box box = nodes[cursor].box;
    std::vector<std::vector<Index>> parts(static_cast<std::size_t>(J));
    for (Index i : nodes[cursor].members) {
      const double v = circle ? grid.angles[static_cast<std::size_t>(i)]
                              : (axis == 0 ? grid.points[static_cast<std::size_t>(i)].x
                                           : grid.points[static_cast<std::size_t>(i)].y);
      parts[static_cast<std::size_t>(child_slot(v, box.lo[axis], box.hi[axis], J))].push_back(i);
    }
    for (int k = 0; k < J; ++k) {
      BuildNode child;
      child.region.level = level + 1;
      child.region.parent = static_cast<int>(cursor);
      child.region.path = nodes[cursor].region.path;
      child.region.path.push_back(k + 1);
      child.box = box;
      const double width = box.hi[axis] - box.lo[axis];
      child.box.lo[axis] = box.lo[axis] + width * k / J;
      child.box.hi[axis] = box.lo[axis] + width * (k + 1) / J;
      child.members = std::move(parts[static_cast<std::size_t>(k)]);
      nodes[cursor].region.children.push_back(static_cast<int>(nodes.size()));
      nodes.push_back(std::move(child));
    }
  }

  // Leaves take consecutive ordered indices, original order preserved inside a leaf.
  std::vector<Index> to_ord(static_cast<std::size_t>(n), -1);
  Index next = 0;
  for (auto& node : nodes) {
    if (node.region.level != M) continue;
    if (node.members.empty())
      throw Error("build_partition: leaf region " + path_string(node.region.path) + " contains no grid points");
    std::sort(node.members.begin(), node.members.end());
    node.region.begin = next;
    for (Index i : node.members) to_ord[static_cast<std::size_t>(i)] = next++;
    node.region.end = next;
  }
  for (std::size_t id = nodes.size(); id-- > 0;) {
    auto& reg = nodes[id].region;
    if (reg.level == M) continue;
    reg.begin = nodes[static_cast<std::size_t>(reg.children.front())].region.begin;
    reg.end = nodes[static_cast<std::size_t>(reg.children.back())].region.end;
  }

  // Knots: uniform draws per region, excluding knots taken by ancestors.
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  std::vector<Region> regions;
  regions.reserve(nodes.size());
  for (auto& node : nodes) regions.push_back(std::move(node.region));
  for (std::size_t id = 0; id < regions.size(); ++id) {
    Region& reg = regions[id];
    std::vector<Index> excluded;
    for (int a = reg.parent; a >= 0; a = regions[static_cast<std::size_t>(a)].parent)
      for (Index k : regions[static_cast<std::size_t>(a)].knots) excluded.push_back(k);
    for (Index k : excluded) taken[static_cast<std::size_t>(k)] = 1;
    std::vector<Index> candidates;
    candidates.reserve(static_cast<std::size_t>(reg.size()));
    for (Index k = reg.begin; k < reg.end; ++k)
      if (!taken[static_cast<std::size_t>(k)]) candidates.push_back(k);
    for (Index k : excluded) taken[static_cast<std::size_t>(k)] = 0;

    const int r = config.knots[static_cast<std::size_t>(reg.level)];
    if (static_cast<Index>(candidates.size()) < r)
      throw Error("build_partition: region " + path_string(reg.path) + " has " +
                  std::to_string(candidates.size()) + " knot candidates but needs r=" + std::to_string(r));
    std::mt19937_64 rng(region_key(config.seed, reg.path));
    for (int j = 0; j < r; ++j) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(j), candidates.size() - 1);
      std::swap(candidates[static_cast<std::size_t>(j)], candidates[pick(rng)]);
    }
    reg.knots.assign(candidates.begin(), candidates.begin() + r);
    std::sort(reg.knots.begin(), reg.knots.end());
    reg.rank = config.ranks[static_cast<std::size_t>(reg.level)];
  }

  // Column layout: finest level first, root last.
  Index col = 0;
  for (int m = M; m >= 0; --m)
    for (auto& reg : regions)
      if (reg.level == m) {
        reg.col_offset = col;
        col += reg.rank;
      }

  return std::make_shared<const MultiResPartition>(grid, config, std::move(regions), std::move(to_ord));
}

VectorXd to_ordered(const MultiResPartition& p, const VectorXd& original) {
  if (original.size() != p.n()) throw Error("to_ordered: vector length does not match grid size");
  VectorXd out(original.size());
  for (Index i = 0; i < p.n(); ++i) out[p.to_ordered()[static_cast<std::size_t>(i)]] = original[i];
  return out;
}

VectorXd to_original(const MultiResPartition& p, const VectorXd& ordered) {
  if (ordered.size() != p.n()) throw Error("to_original: vector length does not match grid size");
  VectorXd out(ordered.size());
  for (Index k = 0; k < p.n(); ++k) out[p.to_original()[static_cast<std::size_t>(k)]] = ordered[k];
  return out;
}

MatrixXd to_ordered(const MultiResPartition& p, const MatrixXd& original) {
  if (original.rows() != p.n() || original.cols() != p.n())
    throw Error("to_ordered: matrix dimensions do not match grid size");
  const auto& orig = p.to_original();
  MatrixXd out(p.n(), p.n());
  for (Index j = 0; j < p.n(); ++j)
    for (Index i = 0; i < p.n(); ++i)
      out(i, j) = original(orig[static_cast<std::size_t>(i)], orig[static_cast<std::size_t>(j)]);
  return out;
}

MatrixXd to_original(const MultiResPartition& p, const MatrixXd& ordered) {
  if (ordered.rows() != p.n() || ordered.cols() != p.n())
    throw Error("to_original: matrix dimensions do not match grid size");
  const auto& ord = p.to_ordered();
  MatrixXd out(p.n(), p.n());
  for (Index j = 0; j < p.n(); ++j)
    for (Index i = 0; i < p.n(); ++i)
      out(i, j) = ordered(ord[static_cast<std::size_t>(i)], ord[static_cast<std::size_t>(j)]);
  return out;
}

SparseRowMatrix to_ordered(const MultiResPartition& p, const SparseRowMatrix& original) {
  if (original.rows() != p.n() || original.cols() != p.n())
    throw Error("to_ordered: sparse matrix dimensions do not match grid size");
  std::vector<Eigen::Triplet<double, Index>> trips;
  trips.reserve(static_cast<std::size_t>(original.nonZeros()));
  const auto& ord = p.to_ordered();
  for (Index i = 0; i < original.outerSize(); ++i)
    for (SparseRowMatrix::InnerIterator it(original, i); it; ++it)
      trips.emplace_back(ord[static_cast<std::size_t>(it.row())], ord[static_cast<std::size_t>(it.col())],
                         it.value());
  SparseRowMatrix out(p.n(), p.n());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

void write_permutation_csv(const MultiResPartition& p, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << "old_index,new_index\n";
  for (Index i = 0; i < p.n(); ++i) os << i << "," << p.to_ordered()[static_cast<std::size_t>(i)] << "\n";
}

}  // namespace mrflp
