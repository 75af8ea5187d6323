#pragma once

#include "mrflp/blocksparse.hpp"
#include "mrflp/model.hpp"
#include "mrflp/mralp.hpp"
#include "mrflp/taper.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace mrflp {

/// Snapshot handed to an observer after each time step of an MRF-lp run.
/// Pointers are valid only during the callback; gram/chol are null when the
/// step had no observations.
struct StepTrace {
  int t = 0;
  const BlockFactor* forecast_factor = nullptr;
  const BlockFactor* filtered_factor = nullptr;
  const BlockGram* gram = nullptr;
  const BlockTriangular* chol = nullptr;
  const BlockTriangular* chol_inverse = nullptr;
  int newton_iterations = 0;
};

using StepObserver = std::function<void(const StepTrace&)>;

struct FilterOptions {
  double epsilon = 1e-6;  // Newton stop: |x_{l+1} - x_l| / sqrt(n) < epsilon
  int max_iterations = 100;
  int divergence_window = 5;  // consecutive non-decreasing steps that count as divergence
  bool keep_factors = false;
  DecomposeOptions decompose;
  StepObserver observer;
};

/// Terminal state of a run, in the partition's ordered space for factors.
struct FilterState {
  int t = 0;
  VectorXd mean;  // original indexing
  std::optional<BlockFactor> factor;
  std::optional<MatrixXd> covariance;  // dense methods
};

struct FilterResult {
  std::vector<VectorXd> means;  // means[t - 1] = mu_{t|t}, original indexing
  std::vector<int> newton_iterations;
  std::vector<double> forecast_ms;
  std::vector<double> update_ms;
  std::vector<BlockFactor> factors;  // B_{t|t} when keep_factors
  FilterState final_state;

  double total_ms() const;
};

/// Dense Kalman filter. Needs linear dynamics and Gaussian observations.
FilterResult kalman_filter(const StateSpaceModel& model, const FilterOptions& options = {});

/// Linear-Gaussian multi-resolution filter with the closed-form update.
FilterResult mrf_lp_filter(const StateSpaceModel& model, const PartitionPtr& partition,
                           const FilterOptions& options = {});

/// Linear dynamics, any observation family; Newton iteration on the Laplace mode.
FilterResult mrf_lp_filter_nongaussian(const StateSpaceModel& model, const PartitionPtr& partition,
                                       const FilterOptions& options = {});

/// Nonlinear dynamics linearized at the filtering mean; update as in the non-Gaussian filter.
FilterResult mrf_lp_filter_nonlinear(const StateSpaceModel& model, const PartitionPtr& partition,
                                     const FilterOptions& options = {});

/// Dense Laplace filter (extended-KF forecast, Newton update with full matrices).
FilterResult dense_laplace_filter(const StateSpaceModel& model, const FilterOptions& options = {});

struct EnkfOptions {
  int members = 30;
  bool use_taper = true;
  TaperFunction taper;
  std::uint64_t seed = 0;
};

/// Perturbed-observation ensemble Kalman filter with a tapered sample covariance.
FilterResult enkf_filter(const StateSpaceModel& model, const EnkfOptions& enkf, const FilterOptions& options = {});

struct NewtonStep {
  VectorXd x;
  BlockFactor factor;  // B L^{-T}
  BlockGram gram;
  BlockTriangular chol;
  BlockTriangular chol_inverse;
};

/// One Newton step from x for the mode of the forecast N(mu_f, B_f B_f^T)
/// times the likelihood; sites are ordered indices.
NewtonStep laplace_newton_step(const VectorXd& mu_f, const BlockFactor& b_f, const VectorXd& x,
                               const ObservationModel& obs, const ObservationSet& y);

struct ForecastResult {
  std::vector<VectorXd> means;       // means[h] for h = 0..horizon, original indexing
  std::vector<BlockFactor> factors;  // factors[h] for h = 1..horizon when requested
};

/// Forecast-only propagation from a terminal MRF-lp state.
ForecastResult forecast(const StateSpaceModel& model, const PartitionPtr& partition, const FilterState& state,
                        int horizon, bool with_factors, const DecomposeOptions& options = {});

/// Lower factor usable for sampling N(0, C): Cholesky, or an eigenvalue square
/// root with negative eigenvalues clamped when C is only semidefinite.
MatrixXd sampling_factor(const MatrixXd& c);

}  // namespace mrflp
