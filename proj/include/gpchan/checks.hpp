#pragma once

#include <cstdint>
#include <string>

#include "gpchan/kernel.hpp"
#include "gpchan/rng.hpp"

namespace gpchan {

struct CheckReport {
  bool passed = true;
  int samples = 0;
  double worst = 0.0;
  std::string detail;
};

/// Central-difference verification of the evidence gradient on random
/// in-bounds hyperparameters over a 4x4 receive array observing 4 active
/// columns of a 4x4 transmit array. Every raw coordinate must match to the
/// given relative tolerance (guarded by max(|analytic|, |numeric|, 1)).
CheckReport gradient_check(int samples, std::uint64_t seed, double tolerance = 1e-5);

/// Positive-semidefiniteness and lattice-shift invariance sweep: random
/// geometries and active subsets with P up to 64, random in-bounds
/// hyperparameters. The base and lifted Grams must satisfy
/// min_eig >= -eig_tol_factor * trace, and the base kernel must be invariant
/// under common lattice shifts of both arguments to shift_tol.
CheckReport psd_check(int samples, std::uint64_t seed, double eig_tol_factor = 1e-8,
                      double shift_tol = 1e-12);

/// Random in-bounds hyperparameters, strictly inside the boxes so that no
/// clamping is active. Exposed for the verification suites.
struct HyperDrawOptions {
  int q_rx = 3;
  int q_tx = 3;
  double amp_lo = 2e-3, amp_hi = 20.0;
  double weight_lo = 2e-4, weight_hi = 5.0;
  double var_lo = 7e-4, var_hi = 0.09;
  double freq_abs = 0.45;
  double l_diag_lo = 0.05, l_diag_hi = 5.0;
  double l_off_abs = 1.5;
  double noise_lo = 0.05, noise_hi = 1.0;
};

HyperParams draw_hyperparams(RngStream& rng, const HyperDrawOptions& opts = {});

}  // namespace gpchan
