#include "mrflp/dynamics.hpp"

#include <cmath>
#include <iostream>

namespace mrflp {

namespace {

using Trip = Eigen::Triplet<double, Index>;

SparseRowMatrix identity(Index n) {
  SparseRowMatrix i(n, n);
  i.setIdentity();
  return i;
}

inline Index wrap(Index i, Index n) { return ((i % n) + n) % n; }

}  // namespace

AdvectionCoefficients advection_coefficients(double alpha, double beta, double ds1, double ds2) {
  if (!(ds1 > 0.0) || !(ds2 > 0.0)) throw Error("advection_coefficients: grid spacings must be > 0");
  AdvectionCoefficients c;
  const double d1 = beta / (ds1 * ds1);
  const double d2 = beta / (ds2 * ds2);
  const double a1 = alpha / (2.0 * ds1);
  const double a2 = alpha / (2.0 * ds2);
  c.c0 = 1.0 - 2.0 * d1 - 2.0 * d2;
  c.cm1 = d1 - a1;
  c.c1 = d1 + a1;
  c.cm2 = d2 - a2;
  c.c2 = d2 + a2;
  return c;
}

SparseRowMatrix advection_diffusion_matrix(int nx, int ny, double alpha, double beta, double ds1, double ds2) {
  if (nx < 1 || ny < 1) throw Error("advection_diffusion_matrix: needs a regular grid");
  const auto c = advection_coefficients(alpha, beta, ds1, ds2);
  if (std::abs(c.c0) > 1.0) std::cerr << "warning: advection-diffusion centre coefficient |c0| > 1\n";
  const Index n = static_cast<Index>(nx) * ny;
  std::vector<Trip> trips;
  trips.reserve(static_cast<std::size_t>(5 * n));
  for (int r = 0; r < ny; ++r)
    for (int col = 0; col < nx; ++col) {
      const Index i = static_cast<Index>(r) * nx + col;
      trips.emplace_back(i, i, c.c0);
      if (col > 0) trips.emplace_back(i, i - 1, c.cm1);
      if (col + 1 < nx) trips.emplace_back(i, i + 1, c.c1);
      if (r > 0) trips.emplace_back(i, i - nx, c.cm2);
      if (r + 1 < ny) trips.emplace_back(i, i + nx, c.c2);
    }
  SparseRowMatrix a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

VectorXd lorenz05_drift(const VectorXd& x, double forcing) {
  const Index n = x.size();
  if (n < 4) throw Error("lorenz05_drift: need at least 4 sites");
  VectorXd f(n);
  for (Index i = 0; i < n; ++i)
    f[i] = x[wrap(i - 1, n)] * (x[wrap(i + 1, n)] - x[wrap(i - 2, n)]) - x[i] + forcing;
  return f;
}

SparseRowMatrix lorenz05_drift_jacobian(const VectorXd& x) {
  const Index n = x.size();
  if (n < 4) throw Error("lorenz05_drift_jacobian: need at least 4 sites");
  std::vector<Trip> trips;
  trips.reserve(static_cast<std::size_t>(4 * n));
  for (Index i = 0; i < n; ++i) {
    const Index im1 = wrap(i - 1, n), ip1 = wrap(i + 1, n), im2 = wrap(i - 2, n);
    trips.emplace_back(i, i, -1.0);
    trips.emplace_back(i, im1, x[ip1] - x[im2]);
    trips.emplace_back(i, ip1, x[im1]);
    trips.emplace_back(i, im2, -x[im1]);
  }
  SparseRowMatrix j(n, n);
  j.setFromTriplets(trips.begin(), trips.end());
  return j;
}

VectorXd lorenz05_step(const VectorXd& x, double dt, double forcing) {
  if (!(dt > 0.0)) throw Error("lorenz05_step: dt must be > 0");
  const VectorXd k1 = lorenz05_drift(x, forcing);
  const VectorXd k2 = lorenz05_drift(x + 0.5 * dt * k1, forcing);
  const VectorXd k3 = lorenz05_drift(x + 0.5 * dt * k2, forcing);
  const VectorXd k4 = lorenz05_drift(x + dt * k3, forcing);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

SparseRowMatrix lorenz05_jacobian(const VectorXd& x, double dt, double forcing) {
  if (!(dt > 0.0)) throw Error("lorenz05_jacobian: dt must be > 0");
  const Index n = x.size();
  const SparseRowMatrix eye = identity(n);
  const VectorXd k1 = lorenz05_drift(x, forcing);
  const VectorXd x2 = x + 0.5 * dt * k1;
  const VectorXd k2 = lorenz05_drift(x2, forcing);
  const VectorXd x3 = x + 0.5 * dt * k2;
  const VectorXd k3 = lorenz05_drift(x3, forcing);
  const VectorXd x4 = x + dt * k3;

  const SparseRowMatrix j1 = lorenz05_drift_jacobian(x);
  const SparseRowMatrix j2 = lorenz05_drift_jacobian(x2) * SparseRowMatrix(eye + 0.5 * dt * j1);
  const SparseRowMatrix j3 = lorenz05_drift_jacobian(x3) * SparseRowMatrix(eye + 0.5 * dt * j2);
  const SparseRowMatrix j4 = lorenz05_drift_jacobian(x4) * SparseRowMatrix(eye + dt * j3);
  SparseRowMatrix out = eye + (dt / 6.0) * (j1 + 2.0 * j2 + 2.0 * j3 + j4);
  out.makeCompressed();
  return out;
}

LinearDynamics::LinearDynamics(SparseRowMatrix a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols()) throw Error("LinearDynamics: matrix must be square");
  a_.makeCompressed();
}

FunctionDynamics::FunctionDynamics(Index n, Map map, Jac jac) : n_(n), map_(std::move(map)), jac_(std::move(jac)) {}

Lorenz05Dynamics::Lorenz05Dynamics(Index n, double dt, double forcing) : n_(n), dt_(dt), forcing_(forcing) {
  if (n < 4) throw Error("Lorenz05Dynamics: need at least 4 sites");
  if (!(dt > 0.0)) throw Error("Lorenz05Dynamics: dt must be > 0");
}

QuadraticMap::QuadraticMap(Index n, double a, double b) : n_(n), a_(a), b_(b) {}

VectorXd QuadraticMap::apply(const VectorXd& x) const { return (a_ * x.array() + b_ * x.array().square()).matrix(); }

SparseRowMatrix QuadraticMap::jacobian(const VectorXd& x) const {
  SparseRowMatrix j(x.size(), x.size());
  j.reserve(Eigen::VectorXi::Constant(x.size(), 1));
  for (Index i = 0; i < x.size(); ++i) j.insert(i, i) = a_ + 2.0 * b_ * x[i];
  j.makeCompressed();
  return j;
}

DynamicsPtr make_scaled_identity(Index n, double coefficient) {
  SparseRowMatrix a(n, n);
  a.setIdentity();
  a *= coefficient;
  return std::make_shared<LinearDynamics>(std::move(a));
}

PermutedDynamics::PermutedDynamics(DynamicsPtr inner, std::vector<Index> to_original)
    : inner_(std::move(inner)), to_original_(std::move(to_original)) {
  if (static_cast<Index>(to_original_.size()) != inner_->size()) throw Error("PermutedDynamics: size mismatch");
  to_permuted_.assign(to_original_.size(), -1);
  for (std::size_t k = 0; k < to_original_.size(); ++k)
    to_permuted_[static_cast<std::size_t>(to_original_[k])] = static_cast<Index>(k);
}

VectorXd PermutedDynamics::to_inner(const VectorXd& x) const {
  VectorXd y(x.size());
  for (Index k = 0; k < x.size(); ++k) y[to_original_[static_cast<std::size_t>(k)]] = x[k];
  return y;
}

VectorXd PermutedDynamics::from_inner(const VectorXd& y) const {
  VectorXd x(y.size());
  for (Index k = 0; k < y.size(); ++k) x[k] = y[to_original_[static_cast<std::size_t>(k)]];
  return x;
}

VectorXd PermutedDynamics::apply(const VectorXd& x) const { return from_inner(inner_->apply(to_inner(x))); }

SparseRowMatrix PermutedDynamics::jacobian(const VectorXd& x) const {
  const SparseRowMatrix j = inner_->jacobian(to_inner(x));
  std::vector<Trip> trips;
  trips.reserve(static_cast<std::size_t>(j.nonZeros()));
  for (Index i = 0; i < j.outerSize(); ++i)
    for (SparseRowMatrix::InnerIterator it(j, i); it; ++it)
      trips.emplace_back(to_permuted_[static_cast<std::size_t>(it.row())],
                         to_permuted_[static_cast<std::size_t>(it.col())], it.value());
  SparseRowMatrix out(j.rows(), j.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace mrflp
