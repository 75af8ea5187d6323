#include "mrflp/covariance.hpp"

#include "mrflp/kernels.hpp"

#include <Eigen/Cholesky>

namespace mrflp {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

void split_coords(std::span<const Point2> pts, std::vector<double>& xs, std::vector<double>& ys) {
  xs.resize(pts.size());
  ys.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    xs[i] = pts[i].x;
    ys[i] = pts[i].y;
  }
}

void apply_family(MatrixXd& d, const CovarianceFunction& f) {
  auto a = d.array();
  switch (f.family) {
    case CovFamily::Exponential:
      a = f.variance * (-a / f.range).exp();
      break;
    case CovFamily::Matern15: {
      const Eigen::ArrayXXd s = (kSqrt3 / f.range) * a;
      a = f.variance * (1.0 + s) * (-s).exp();
      break;
    }
  }
}

}  // namespace

double CovarianceFunction::operator()(double d) const {
  switch (family) {
    case CovFamily::Exponential:
      return variance * std::exp(-d / range);
    case CovFamily::Matern15: {
      const double s = kSqrt3 * d / range;
      return variance * (1.0 + s) * std::exp(-s);
    }
  }
  return 0.0;
}

void CovarianceFunction::validate() const {
  if (!(variance >= 0.0) || !std::isfinite(variance)) throw Error("covariance variance must be finite and >= 0");
  if (!(range > 0.0) || !std::isfinite(range)) throw Error("covariance range must be finite and > 0");
}

CovFamily parse_cov_family(std::string_view name) {
  if (name == "exponential") return CovFamily::Exponential;
  if (name == "matern15" || name == "matern1.5") return CovFamily::Matern15;
  throw Error("unknown covariance family '" + std::string(name) + "'");
}

std::string_view cov_family_name(CovFamily family) {
  return family == CovFamily::Exponential ? "exponential" : "matern15";
}

MatrixXd cov_block(std::span<const Point2> rows, std::span<const Point2> cols, const CovarianceFunction& f) {
  f.validate();
  std::vector<double> ax, ay, bx, by;
  split_coords(rows, ax, ay);
  split_coords(cols, bx, by);
  MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  if (out.size() == 0) return out;
  kernels::pairwise_distance(rows.size(), ax.data(), ay.data(), cols.size(), bx.data(), by.data(), out.data(),
                             static_cast<std::size_t>(out.rows()));
  apply_family(out, f);
  return out;
}

MatrixXd cov_block(std::span<const Point2> points, std::span<const Index> rows, std::span<const Index> cols,
                   const CovarianceFunction& f) {
  std::vector<Point2> a(rows.size()), b(cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) a[i] = points[static_cast<std::size_t>(rows[i])];
  for (std::size_t j = 0; j < cols.size(); ++j) b[j] = points[static_cast<std::size_t>(cols[j])];
  return cov_block(a, b, f);
}

MatrixXd cov_cholesky(std::span<const Point2> points, const CovarianceFunction& f, double jitter) {
  MatrixXd c = cov_block(points, points, f);
  c.diagonal().array() += jitter;
  Eigen::LLT<MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("cov_cholesky: covariance is not positive definite");
  return llt.matrixL();
}

}  // namespace mrflp
