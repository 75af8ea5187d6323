#pragma once

#include "mrflp/types.hpp"

#include <span>
#include <string_view>

namespace mrflp {

enum class TaperKind { Kanter, Wendland2 };

/// Compactly supported correlation, 1 at d = 0 and 0 for d >= radius.
struct TaperFunction {
  TaperKind kind = TaperKind::Kanter;
  double radius = 0.1;

  double operator()(double d) const;
};

TaperKind parse_taper_kind(std::string_view name);

/// Entries taper(d_ij) where d_ij < radius; nothing stored elsewhere.
SparseRowMatrix taper_matrix(std::span<const Point2> points, const TaperFunction& taper);

/// Average number of stored entries per row of taper_matrix at this radius.
double taper_row_nnz(std::span<const Point2> points, double radius);

/// Radius whose average row count in taper_matrix is closest to target; ties
/// go to the smaller count. The radius sits midway between distance levels.
double tune_taper_radius(std::span<const Point2> points, Index target_nnz);

}  // namespace mrflp
