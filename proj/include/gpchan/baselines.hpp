#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "gpchan/channel.hpp"
#include "gpchan/pilot.hpp"

namespace gpchan {

/// Isotropic-scattering prior for the linear MMSE baseline: covariance
/// sigma_h^2 * sinc(2 * distance / lambda) between the virtual positions of
/// two channel entries. Each entry (rx i, tx j) is placed at the sum of the
/// two element positions; only pairwise distances enter the kernel.
struct IsoPrior {
  double sigma_h_sq = 1.0;
  double lambda = 1.0;  // carrier wavelength, metres
  std::vector<Eigen::Vector3d> positions;  // one per vectorized channel entry
};

/// Builds the prior for half-wavelength URAs. The two arrays sit in parallel
/// y-z planes separated by plane_gap_lambda wavelengths along x; the offset
/// cancels in every pairwise distance.
IsoPrior make_ura_iso_prior(const UraGeometry& rx_geom, const UraGeometry& tx_geom,
                            double lambda, double spacing_over_lambda, double sigma_h_sq = 1.0,
                            double plane_gap_lambda = 10.0);

/// Dense prior covariance over all channel entries.
Eigen::MatrixXd iso_prior_covariance(const IsoPrior& prior);

struct SparseRecoveryConfig {
  int omp_sparsity = 7;      // greedy atom count
  double amp_threshold = 1.2;  // shrinkage multiplier on the noise estimate
  int amp_iters = 50;
  int oversampling = 1;      // angular grid densification per axis
};

/// Observed columns copied into place, unobserved columns zero.
ChannelMatrix ls_estimate(const Eigen::MatrixXcd& z_mat, const ActiveSet& omega, int n_tx);

/// Linear MMSE with the isotropic prior; the sampling operator is realized
/// as row selection of the prior covariance.
ChannelMatrix mmse_isotropic(const ObservationSet& obs, const IsoPrior& prior, int n_rx, int n_tx);

/// Unitary 2-D DFT dictionary on each array, Kronecker-paired so that
/// vec(H) = dictionary * angular coefficients. With oversampling > 1 the
/// per-axis grids are densified and the columns stay unit norm.
Eigen::MatrixXcd angular_dictionary(const UraGeometry& rx_geom, const UraGeometry& tx_geom,
                                    int oversampling = 1);

/// Orthogonal matching pursuit over the angular dictionary restricted to the
/// observed entries, followed by a least-squares refit (minimum-norm when
/// rank deficient) and synthesis on the full grid.
ChannelMatrix omp_estimate(const ObservationSet& obs, const SparseRecoveryConfig& cfg,
                           const UraGeometry& rx_geom, const UraGeometry& tx_geom);

/// Complex soft threshold: shrinks the magnitude by t, keeps the phase.
std::complex<double> soft_threshold(std::complex<double> v, double t);

struct AmpResult {
  ChannelMatrix estimate;
  int iterations = 0;
  bool diverged = false;
};

/// Approximate message passing in the angular domain with complex soft
/// thresholding at threshold * (residual-median noise estimate) and an
/// Onsager correction. Stops on the iteration cap, residual stagnation, or
/// the divergence guard (best iterate returned, flagged).
AmpResult amp_estimate(const ObservationSet& obs, const SparseRecoveryConfig& cfg,
                       const UraGeometry& rx_geom, const UraGeometry& tx_geom);

}  // namespace gpchan
