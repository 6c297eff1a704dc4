#pragma once

#include <Eigen/Dense>

#include "gpchan/channel.hpp"
#include "gpchan/lattice.hpp"
#include "gpchan/rng.hpp"

namespace gpchan {

/// Observations of the active channel columns after matched filtering:
/// the training grid, the complex samples in grid order, their stacked
/// real-augmented form [Re; Im], and the noise levels.
struct ObservationSet {
  std::vector<IndexPair> grid;
  Eigen::VectorXcd z;
  Eigen::VectorXd z_icm;
  double sigma_obs_sq = 0.0;  // per complex observation
  double sigma_r_sq = 0.0;    // per real task, sigma_obs_sq / 2
};

/// Row-orthonormal pilots: n_active rows of the length x length unitary DFT
/// matrix. Requires length >= n_active.
Eigen::MatrixXcd design_pilots(int n_active, int length);

/// Received training block Y = sqrt(p_active) * H(:, omega) * S + N with
/// i.i.d. circular noise of variance sigma_n_sq per complex entry. Column
/// selection is applied directly; no dense selection matrix is formed.
Eigen::MatrixXcd transmit_and_receive(const ChannelMatrix& h, const ActiveSet& omega,
                                      const Eigen::MatrixXcd& pilots, double p_active,
                                      double sigma_n_sq, RngStream& rng);

/// Z = Y S^H / sqrt(p_active). Refuses pilots that are not row-orthonormal;
/// the colored-noise case is out of scope.
Eigen::MatrixXcd matched_filter(const Eigen::MatrixXcd& received, const Eigen::MatrixXcd& pilots,
                                double p_active);

/// Stacks Z column-wise (receive index fastest, aligned with training_grid)
/// and builds the real-augmented vector.
ObservationSet build_observations(const Eigen::MatrixXcd& z_mat, const ActiveSet& omega, int n_rx,
                                  double sigma_obs_sq);

/// Noise variance for a sweep point: sigma_n^2 = n_active * p_active / snr.
double snr_to_noise(double snr_linear, int n_active, double p_active);

}  // namespace gpchan
