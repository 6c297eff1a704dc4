#include <doctest.h>

#include <stdexcept>

#include "gpchan/lattice.hpp"

using namespace gpchan;

TEST_CASE("coords_of: column-major anchor values") {
  const UraGeometry g{4, 4};
  CHECK(coords_of(1, g).y == 0);
  CHECK(coords_of(1, g).z == 0);
  CHECK(coords_of(6, g).y == 1);
  CHECK(coords_of(6, g).z == 1);
  CHECK(coords_of(16, g).y == 3);
  CHECK(coords_of(16, g).z == 3);
  CHECK_THROWS_AS((void)coords_of(0, g), std::out_of_range);
  CHECK_THROWS_AS((void)coords_of(17, g), std::out_of_range);
}

TEST_CASE("coords_of: bijection on several geometries") {
  for (const UraGeometry g : {UraGeometry{4, 4}, UraGeometry{2, 3}, UraGeometry{1, 5}}) {
    for (int i = 1; i <= g.total(); ++i) {
      const LatticeCoord c = coords_of(i, g);
      CHECK(1 + c.y + g.ny * c.z == i);
    }
  }
}

TEST_CASE("equispaced_subset: stride rule") {
  CHECK(equispaced_subset(16, 16).indices() ==
        std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16});
  CHECK(equispaced_subset(16, 4).indices() == std::vector<int>{1, 5, 9, 13});
  CHECK(equispaced_subset(16, 8).indices() == std::vector<int>{1, 3, 5, 7, 9, 11, 13, 15});
  CHECK(equispaced_subset(16, 1).indices() == std::vector<int>{1});
  CHECK_THROWS_AS((void)equispaced_subset(16, 17), std::invalid_argument);
  CHECK_THROWS_AS((void)equispaced_subset(16, 0), std::invalid_argument);
}

TEST_CASE("training_grid: receive-fastest ordering") {
  {
    const auto grid = training_grid(2, ActiveSet({1}, 4));
    REQUIRE(grid.size() == 2);
    CHECK(grid[0] == IndexPair{1, 1});
    CHECK(grid[1] == IndexPair{2, 1});
  }
  {
    const auto grid = training_grid(2, ActiveSet({1, 3}, 4));
    REQUIRE(grid.size() == 4);
    CHECK(grid[0] == IndexPair{1, 1});
    CHECK(grid[1] == IndexPair{2, 1});
    CHECK(grid[2] == IndexPair{1, 3});
    CHECK(grid[3] == IndexPair{2, 3});
  }
  CHECK(training_grid(16, equispaced_subset(16, 8)).size() == 128);
}

TEST_CASE("prediction_grid: full, missing-only, and the set identity") {
  const ActiveSet omega = equispaced_subset(16, 8);
  const auto full = prediction_grid(2, 2, PredictionMode::kFull, ActiveSet({1}, 2));
  CHECK(full.size() == 4);

  const auto missing = prediction_grid(16, 16, PredictionMode::kMissingOnly, omega);
  CHECK(missing.size() == 128);

  // full minus training equals missing-only as sets
  const auto train = training_grid(16, omega);
  const auto everything = prediction_grid(16, 16, PredictionMode::kFull, omega);
  std::vector<bool> in_train(16 * 16, false), in_missing(16 * 16, false);
  for (const auto& p : train) in_train[static_cast<size_t>(flat_index(p, 16))] = true;
  for (const auto& p : missing) in_missing[static_cast<size_t>(flat_index(p, 16))] = true;
  for (const auto& p : everything) {
    const size_t f = static_cast<size_t>(flat_index(p, 16));
    CHECK(in_train[f] != in_missing[f]);
  }
}

TEST_CASE("active set validation") {
  CHECK_THROWS_AS(ActiveSet({3, 2}, 4), std::invalid_argument);
  CHECK_THROWS_AS(ActiveSet({0, 2}, 4), std::invalid_argument);
  CHECK_THROWS_AS(ActiveSet({2, 2}, 4), std::invalid_argument);
  CHECK_THROWS_AS(ActiveSet({5}, 4), std::invalid_argument);
}

TEST_CASE("index-shifted subsets keep pairwise coordinate differences") {
  // Two equal-stride subsets offset by a lattice translation: coordinate
  // differences depend only on the index differences.
  const UraGeometry g{4, 4};
  const std::vector<int> a{1, 3, 5, 7};
  const std::vector<int> b{9, 11, 13, 15};  // offset by two z-rows
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a.size(); ++j) {
      const LatticeCoord da = coords_of(a[i], g) - coords_of(a[j], g);
      const LatticeCoord db = coords_of(b[i], g) - coords_of(b[j], g);
      CHECK(da.y == db.y);
      CHECK(da.z == db.z);
    }
}
