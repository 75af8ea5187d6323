#pragma once

#include "mrflp/cov_source.hpp"
#include "mrflp/dynamics.hpp"
#include "mrflp/observation.hpp"
#include "mrflp/partition.hpp"

#include <vector>

namespace mrflp {

/// Observations at one time: ascending site indices and their values.
struct ObservationSet {
  std::vector<Index> sites;
  VectorXd values;

  Index size() const { return static_cast<Index>(sites.size()); }
  bool empty() const { return sites.empty(); }
};

/// x_t = A(x_{t-1}) + w_t, w_t ~ N(0, Q); y_t | x_t ~ g at the observed sites;
/// x_0 ~ N(mu0, Sigma0). Everything is in the grid's original indexing.
struct StateSpaceModel {
  GridSpec grid;
  DynamicsPtr dynamics;
  CovSourcePtr q;
  CovSourcePtr sigma0;
  VectorXd mu0;
  ObservationModel obs;
  std::vector<ObservationSet> data;  // data[t - 1] holds y_t

  Index n() const { return grid.size(); }
  int horizon() const { return static_cast<int>(data.size()); }
  /// Throws on inconsistent sizes, unsorted or duplicated sites, or invalid y.
  void validate() const;
};

/// Maps observation sites into the partition's ordered space, re-sorted ascending.
ObservationSet to_ordered(const MultiResPartition& p, const ObservationSet& obs);

}  // namespace mrflp
