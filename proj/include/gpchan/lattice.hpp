#pragma once

#include <vector>

namespace gpchan {

/// Uniform rectangular array: ny elements along y, nz along z.
struct UraGeometry {
  int ny = 1;
  int nz = 1;
  int total() const { return ny * nz; }
};

/// Integer lattice coordinate of an array element. The kernel consumes only
/// coordinate differences, so no centering offset is applied.
struct LatticeCoord {
  int y = 0;
  int z = 0;
};

inline LatticeCoord operator-(const LatticeCoord& a, const LatticeCoord& b) {
  return {a.y - b.y, a.z - b.z};
}

/// One channel entry: receive antenna index paired with transmit antenna
/// index, both 1-based.
struct IndexPair {
  int rx = 1;
  int tx = 1;
};

inline bool operator==(const IndexPair& a, const IndexPair& b) {
  return a.rx == b.rx && a.tx == b.tx;
}

/// Ordered set of distinct active transmit antenna indices (1-based,
/// strictly increasing).
class ActiveSet {
 public:
  ActiveSet(std::vector<int> indices, int array_size);

  const std::vector<int>& indices() const { return indices_; }
  int size() const { return static_cast<int>(indices_.size()); }
  int array_size() const { return array_size_; }
  bool contains(int tx_index) const;

 private:
  std::vector<int> indices_;
  int array_size_;
};

/// Maps a 1-based antenna index to lattice coordinates, column-major:
/// y = (index-1) mod ny, z = (index-1) div ny.
LatticeCoord coords_of(int index, const UraGeometry& geom);

/// Equispaced selection of `budget` transmit antennas out of `array_size`:
/// a_l = 1 + floor((l-1) * array_size / budget).
ActiveSet equispaced_subset(int array_size, int budget);

/// Training index set in vectorization order (receive index fastest),
/// matching vec of the n_rx x n_active matched-filter output.
std::vector<IndexPair> training_grid(int n_rx, const ActiveSet& omega);

enum class PredictionMode { kFull, kMissingOnly };

/// All antenna pairs (full mode) or the complement of the training grid
/// (missing-only), in the same receive-fastest order.
std::vector<IndexPair> prediction_grid(int n_rx, int n_tx, PredictionMode mode,
                                       const ActiveSet& omega);

/// Flat position of a pair in the receive-fastest vectorization of the full
/// n_rx x n_tx grid (0-based).
inline int flat_index(const IndexPair& p, int n_rx) { return (p.tx - 1) * n_rx + (p.rx - 1); }

}  // namespace gpchan
