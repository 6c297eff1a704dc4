#pragma once

#include <Eigen/Dense>

#include "gpchan/kernel.hpp"
#include "gpchan/pilot.hpp"

namespace gpchan {

/// Gaussian posterior over the stacked [real; imaginary] field at the
/// prediction grid. The full covariance is only populated on request.
struct Posterior {
  Eigen::VectorXd mean;      // 2 * P_star
  Eigen::VectorXd cov_diag;  // 2 * P_star
  Eigen::MatrixXd cov_full;  // empty unless requested
  double jitter_used = 0.0;
};

/// Exact GP conditioning on the observations: mean K*x C^-1 z and covariance
/// K** - K*x C^-1 K*x^T, computed through a Cholesky factorization of the
/// jittered training covariance.
Posterior posterior(const HyperParams& hp, const ObservationSet& obs,
                    const std::vector<IndexPair>& x_star, const UraGeometry& rx_geom,
                    const UraGeometry& tx_geom, bool want_full_cov = false);

/// Reassembles the complex channel estimate from a stacked posterior mean.
/// The grid must cover every antenna pair exactly once (concatenate the
/// missing-only grid with the training grid first if needed).
ChannelMatrix reconstruct(const Eigen::VectorXd& stacked_mean, const std::vector<IndexPair>& grid,
                          int n_rx, int n_tx);

struct CredibleInterval {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

/// Per-task interval mean +- z(level) * sqrt(var).
CredibleInterval credible_interval(const Posterior& post, double level);

}  // namespace gpchan
