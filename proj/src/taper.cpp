#include "mrflp/taper.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace mrflp {

double TaperFunction::operator()(double d) const {
  const double h = d / radius;
  if (h >= 1.0) return 0.0;
  if (h <= 0.0) return 1.0;
  switch (kind) {
    case TaperKind::Kanter: {
      const double w = 2.0 * std::numbers::pi * h;
      return (1.0 - h) * std::sin(w) / w + (1.0 - std::cos(w)) / (std::numbers::pi * w);
    }
    case TaperKind::Wendland2: {
      const double s = 1.0 - h;
      const double s3 = s * s * s;
      return s3 * s3 * (1.0 + 6.0 * h + 35.0 * h * h / 3.0);
    }
  }
  return 0.0;
}

TaperKind parse_taper_kind(std::string_view name) {
  if (name == "kanter") return TaperKind::Kanter;
  if (name == "wendland2") return TaperKind::Wendland2;
  throw Error("unknown taper '" + std::string(name) + "'");
}

SparseRowMatrix taper_matrix(std::span<const Point2> points, const TaperFunction& taper) {
  if (!(taper.radius > 0.0)) throw Error("taper radius must be > 0");
  const Index n = static_cast<Index>(points.size());
  std::vector<Eigen::Triplet<double, Index>> trips;
  trips.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    trips.emplace_back(i, i, 1.0);
    for (Index j = i + 1; j < n; ++j) {
      const double d = distance(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
      if (d < taper.radius) {
        const double v = taper(d);
        trips.emplace_back(i, j, v);
        trips.emplace_back(j, i, v);
      }
    }
  }
  SparseRowMatrix t(n, n);
  t.setFromTriplets(trips.begin(), trips.end());
  return t;
}

double taper_row_nnz(std::span<const Point2> points, double radius) {
  const std::size_t n = points.size();
  if (n == 0) return 0.0;
  std::size_t count = n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (distance(points[i], points[j]) < radius) count += 2;
  return static_cast<double>(count) / static_cast<double>(n);
}

double tune_taper_radius(std::span<const Point2> points, Index target_nnz) {
  const std::size_t n = points.size();
  if (n == 0) throw Error("tune_taper_radius: empty point set");
  if (n == 1) return 1.0;
  std::vector<double> d;
  d.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d.push_back(distance(points[i], points[j]));
  std::sort(d.begin(), d.end());
  // Candidate radii sit in the gaps between distinct distance levels; distances
  // equal up to rounding form one level so the count never depends on ulps.
  const double target = static_cast<double>(target_nnz);
  const double nd = static_cast<double>(n);
  double best_radius = 0.5 * d.front();
  double best_gap = std::abs(1.0 - target);
  auto consider = [&](std::size_t k, double radius) {
    const double gap = std::abs((nd + 2.0 * static_cast<double>(k)) / nd - target);
    if (gap < best_gap) {
      best_gap = gap;
      best_radius = radius;
    }
  };
  for (std::size_t k = 1; k < d.size(); ++k)
    if (d[k] - d[k - 1] > 1e-9 * d[k]) consider(k, 0.5 * (d[k - 1] + d[k]));
  consider(d.size(), d.back() * (1.0 + 1e-6));
  return best_radius;
}

}  // namespace mrflp
