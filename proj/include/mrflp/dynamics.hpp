#pragma once

#include "mrflp/types.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace mrflp {

struct AdvectionCoefficients {
  double c0 = 1.0;
  double cm1 = 0.0;  // left neighbour (s1 - ds1)
  double c1 = 0.0;   // right neighbour (s1 + ds1)
  double cm2 = 0.0;  // lower neighbour (s2 - ds2)
  double c2 = 0.0;   // upper neighbour (s2 + ds2)
};

AdvectionCoefficients advection_coefficients(double alpha, double beta, double ds1, double ds2);

/// Forward-Euler / centred-difference advection-diffusion step on an nx x ny
/// grid indexed row * nx + col. Coefficients of missing neighbours at the edge
/// are dropped.
SparseRowMatrix advection_diffusion_matrix(int nx, int ny, double alpha, double beta, double ds1, double ds2);

/// dx_i/dt = x_{i-1} (x_{i+1} - x_{i-2}) - x_i + F on a periodic ring.
VectorXd lorenz05_drift(const VectorXd& x, double forcing);
SparseRowMatrix lorenz05_drift_jacobian(const VectorXd& x);
/// One classical RK4 step.
VectorXd lorenz05_step(const VectorXd& x, double dt, double forcing);
/// Exact derivative of lorenz05_step with respect to x.
SparseRowMatrix lorenz05_jacobian(const VectorXd& x, double dt, double forcing);

/// State transition x -> A(x) with its Jacobian.
class Dynamics {
 public:
  virtual ~Dynamics() = default;
  virtual Index size() const = 0;
  virtual VectorXd apply(const VectorXd& x) const = 0;
  virtual SparseRowMatrix jacobian(const VectorXd& x) const = 0;
  /// True when apply(x) = jacobian(.) x for every x.
  virtual bool is_linear() const { return false; }
};

using DynamicsPtr = std::shared_ptr<const Dynamics>;

class LinearDynamics final : public Dynamics {
 public:
  explicit LinearDynamics(SparseRowMatrix a);
  Index size() const override { return a_.rows(); }
  VectorXd apply(const VectorXd& x) const override { return a_ * x; }
  SparseRowMatrix jacobian(const VectorXd&) const override { return a_; }
  bool is_linear() const override { return true; }
  const SparseRowMatrix& matrix() const { return a_; }

 private:
  SparseRowMatrix a_;
};

/// Arbitrary map given as callables; treated as nonlinear even when it is not.
class FunctionDynamics final : public Dynamics {
 public:
  using Map = std::function<VectorXd(const VectorXd&)>;
  using Jac = std::function<SparseRowMatrix(const VectorXd&)>;
  FunctionDynamics(Index n, Map map, Jac jac);
  Index size() const override { return n_; }
  VectorXd apply(const VectorXd& x) const override { return map_(x); }
  SparseRowMatrix jacobian(const VectorXd& x) const override { return jac_(x); }

 private:
  Index n_;
  Map map_;
  Jac jac_;
};

class Lorenz05Dynamics final : public Dynamics {
 public:
  Lorenz05Dynamics(Index n, double dt, double forcing);
  Index size() const override { return n_; }
  VectorXd apply(const VectorXd& x) const override { return lorenz05_step(x, dt_, forcing_); }
  SparseRowMatrix jacobian(const VectorXd& x) const override { return lorenz05_jacobian(x, dt_, forcing_); }

 private:
  Index n_;
  double dt_;
  double forcing_;
};

/// Elementwise a x_i + b x_i^2.
class QuadraticMap final : public Dynamics {
 public:
  QuadraticMap(Index n, double a = 0.1, double b = 0.1);
  Index size() const override { return n_; }
  VectorXd apply(const VectorXd& x) const override;
  SparseRowMatrix jacobian(const VectorXd& x) const override;

 private:
  Index n_;
  double a_, b_;
};

/// coefficient * I.
DynamicsPtr make_scaled_identity(Index n, double coefficient);

/// Dynamics expressed in permuted coordinates: inner acts on original indices,
/// to_original maps a permuted index to its original index.
class PermutedDynamics final : public Dynamics {
 public:
  PermutedDynamics(DynamicsPtr inner, std::vector<Index> to_original);
  Index size() const override { return inner_->size(); }
  VectorXd apply(const VectorXd& x) const override;
  SparseRowMatrix jacobian(const VectorXd& x) const override;
  bool is_linear() const override { return inner_->is_linear(); }

 private:
  VectorXd to_inner(const VectorXd& x) const;
  VectorXd from_inner(const VectorXd& x) const;
  DynamicsPtr inner_;
  std::vector<Index> to_original_;
  std::vector<Index> to_permuted_;
};

}  // namespace mrflp
