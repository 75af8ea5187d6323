#pragma once

#include "mrflp/types.hpp"

#include <random>
#include <string>
#include <string_view>

namespace mrflp {

enum class ObsFamily { Gaussian, Gamma, Poisson };

/// Per-site likelihood g(y | x) with its score and negative Hessian in x.
///   gaussian: y ~ N(x, tau2)
///   gamma:    y ~ Gamma(shape a, rate a exp(-x)), so E[y] = exp(x)
///   poisson:  y ~ Poisson(exp(x))
struct ObservationModel {
  ObsFamily family = ObsFamily::Gaussian;
  double tau2 = 0.05;
  double shape = 3.0;

  bool is_gaussian() const { return family == ObsFamily::Gaussian; }

  /// u = d/dx log g, d = -d^2/dx^2 log g (always >= 0).
  void score_hess(double y, double x, double& u, double& d) const;
  double log_density(double y, double x) const;
  /// Throws if y is outside the support of the family.
  void check_y(double y) const;
  double sample(double x, std::mt19937_64& rng) const;
  void validate() const;
};

ObsFamily parse_obs_family(std::string_view name);
std::string_view obs_family_name(ObsFamily family);

}  // namespace mrflp
