#include "gpchan/lattice.hpp"

#include <stdexcept>
#include <string>

namespace gpchan {

ActiveSet::ActiveSet(std::vector<int> indices, int array_size)
    : indices_(std::move(indices)), array_size_(array_size) {
  if (indices_.empty()) throw std::invalid_argument("ActiveSet: empty index set");
  int prev = 0;
  for (int idx : indices_) {
    if (idx < 1 || idx > array_size_)
      throw std::invalid_argument("ActiveSet: index " + std::to_string(idx) + " out of 1.." +
                                  std::to_string(array_size_));
    if (idx <= prev) throw std::invalid_argument("ActiveSet: indices must be strictly increasing");
    prev = idx;
  }
}

bool ActiveSet::contains(int tx_index) const {
  for (int idx : indices_)
    if (idx == tx_index) return true;
  return false;
}

LatticeCoord coords_of(int index, const UraGeometry& geom) {
  if (index < 1 || index > geom.total())
    throw std::out_of_range("coords_of: index " + std::to_string(index) + " out of 1.." +
                            std::to_string(geom.total()));
  const int k = index - 1;
  return {k % geom.ny, k / geom.ny};
}

ActiveSet equispaced_subset(int array_size, int budget) {
  if (budget < 1 || budget > array_size)
    throw std::invalid_argument("equispaced_subset: budget " + std::to_string(budget) +
                                " invalid for array size " + std::to_string(array_size));
  std::vector<int> idx(budget);
  for (int l = 0; l < budget; ++l)
    idx[l] = 1 + static_cast<int>((static_cast<long long>(l) * array_size) / budget);
  return ActiveSet(std::move(idx), array_size);
}

std::vector<IndexPair> training_grid(int n_rx, const ActiveSet& omega) {
  std::vector<IndexPair> grid;
  grid.reserve(static_cast<size_t>(n_rx) * omega.size());
  for (int tx : omega.indices())
    for (int rx = 1; rx <= n_rx; ++rx) grid.push_back({rx, tx});
  return grid;
}

std::vector<IndexPair> prediction_grid(int n_rx, int n_tx, PredictionMode mode,
                                       const ActiveSet& omega) {
  std::vector<IndexPair> grid;
  for (int tx = 1; tx <= n_tx; ++tx) {
    if (mode == PredictionMode::kMissingOnly && omega.contains(tx)) continue;
    for (int rx = 1; rx <= n_rx; ++rx) grid.push_back({rx, tx});
  }
  return grid;
}

}  // namespace gpchan
