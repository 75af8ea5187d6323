#include "mrflp/model.hpp"

#include <algorithm>
#include <numeric>

namespace mrflp {

void StateSpaceModel::validate() const {
  const Index nn = n();
  if (nn < 1) throw Error("model: empty grid");
  if (!dynamics || dynamics->size() != nn) throw Error("model: dynamics size does not match the grid");
  if (!q || q->size() != nn) throw Error("model: Q size does not match the grid");
  if (!sigma0 || sigma0->size() != nn) throw Error("model: Sigma0 size does not match the grid");
  if (mu0.size() != nn) throw Error("model: mu0 length does not match the grid");
  obs.validate();
  for (std::size_t t = 0; t < data.size(); ++t) {
    const auto& d = data[t];
    const std::string at = "model: time " + std::to_string(t + 1) + ": ";
    if (d.values.size() != d.size()) throw Error(at + "sites and values differ in length");
    for (std::size_t i = 0; i < d.sites.size(); ++i) {
      if (d.sites[i] < 0 || d.sites[i] >= nn) throw Error(at + "site index out of range");
      if (i > 0 && d.sites[i] <= d.sites[i - 1]) throw Error(at + "sites must be strictly ascending");
      obs.check_y(d.values[static_cast<Index>(i)]);
    }
  }
}

ObservationSet to_ordered(const MultiResPartition& p, const ObservationSet& obs) {
  std::vector<std::size_t> order(obs.sites.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& map = p.to_ordered();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return map[static_cast<std::size_t>(obs.sites[a])] < map[static_cast<std::size_t>(obs.sites[b])];
  });
  ObservationSet out;
  out.sites.resize(order.size());
  out.values.resize(obs.values.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.sites[i] = map[static_cast<std::size_t>(obs.sites[order[i]])];
    out.values[static_cast<Index>(i)] = obs.values[static_cast<Index>(order[i])];
  }
  return out;
}

}  // namespace mrflp
