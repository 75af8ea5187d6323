#include "mrflp/observation.hpp"

#include <cmath>

namespace mrflp {

void ObservationModel::score_hess(double y, double x, double& u, double& d) const {
  switch (family) {
    case ObsFamily::Gaussian:
      u = (y - x) / tau2;
      d = 1.0 / tau2;
      return;
    case ObsFamily::Gamma: {
      const double e = y * std::exp(-x);
      u = shape * (-1.0 + e);
      d = shape * e;
      return;
    }
    case ObsFamily::Poisson: {
      const double e = std::exp(x);
      u = y - e;
      d = e;
      return;
    }
  }
}

double ObservationModel::log_density(double y, double x) const {
  switch (family) {
    case ObsFamily::Gaussian:
      return -0.5 * std::log(2.0 * M_PI * tau2) - 0.5 * (y - x) * (y - x) / tau2;
    case ObsFamily::Gamma: {
      const double b = shape * std::exp(-x);
      return shape * std::log(b) - std::lgamma(shape) + (shape - 1.0) * std::log(y) - b * y;
    }
    case ObsFamily::Poisson:
      return y * x - std::exp(x) - std::lgamma(y + 1.0);
  }
  return 0.0;
}

void ObservationModel::check_y(double y) const {
  if (!std::isfinite(y)) throw Error("observation is not finite");
  switch (family) {
    case ObsFamily::Gaussian:
      return;
    case ObsFamily::Gamma:
      if (y < 0.0) throw Error("gamma observation must be >= 0, got " + std::to_string(y));
      return;
    case ObsFamily::Poisson:
      if (y < 0.0 || y != std::floor(y))
        throw Error("poisson observation must be a nonnegative integer, got " + std::to_string(y));
      return;
  }
}

double ObservationModel::sample(double x, std::mt19937_64& rng) const {
  switch (family) {
    case ObsFamily::Gaussian: {
      std::normal_distribution<double> n(0.0, 1.0);
      return x + std::sqrt(tau2) * n(rng);
    }
    case ObsFamily::Gamma: {
      std::gamma_distribution<double> g(shape, std::exp(x) / shape);
      return g(rng);
    }
    case ObsFamily::Poisson: {
      std::poisson_distribution<long long> p(std::exp(x));
      return static_cast<double>(p(rng));
    }
  }
  return 0.0;
}

void ObservationModel::validate() const {
  if (family == ObsFamily::Gaussian && !(tau2 >= 0.0)) throw Error("gaussian observation variance must be >= 0");
  if (family == ObsFamily::Gamma && !(shape > 0.0)) throw Error("gamma shape must be > 0");
}

ObsFamily parse_obs_family(std::string_view name) {
  if (name == "gaussian") return ObsFamily::Gaussian;
  if (name == "gamma") return ObsFamily::Gamma;
  if (name == "poisson") return ObsFamily::Poisson;
  throw Error("unknown observation family '" + std::string(name) + "'");
}

std::string_view obs_family_name(ObsFamily family) {
  switch (family) {
    case ObsFamily::Gaussian:
      return "gaussian";
    case ObsFamily::Gamma:
      return "gamma";
    case ObsFamily::Poisson:
      return "poisson";
  }
  return "?";
}

}  // namespace mrflp
