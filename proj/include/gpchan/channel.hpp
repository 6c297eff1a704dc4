#pragma once

#include <Eigen/Dense>

#include "gpchan/lattice.hpp"
#include "gpchan/rng.hpp"

namespace gpchan {

using ChannelMatrix = Eigen::MatrixXcd;

/// Clustered multipath generation parameters. Time constants in ns, angular
/// spreads in degrees, losses in dB.
struct SvParams {
  int n_paths = 6;
  double k_factor_db = 17.0;         // line-of-sight to diffuse power ratio
  double cluster_arrival_mean_ns = 25.0;
  double ray_arrival_mean_ns = 2.0;
  double cluster_decay_ns = 20.0;
  double ray_decay_ns = 5.0;
  double angular_spread_az_deg = 10.0;
  double angular_spread_el_deg = 7.0;
  double carrier_hz = 28e9;
  double spacing_over_lambda = 0.5;
  double reflection_loss_db_lo = -10.0;
  double reflection_loss_db_hi = -3.0;
  // Retained for configuration completeness; with the fixed unit reference
  // distance used here they cancel under the per-entry power normalization.
  double path_loss_exp_los = 2.0;
  double path_loss_exp_nlos = 3.0;
};

/// Planar-array response for a ray arriving from (azimuth, elevation):
/// element (y, z) gets phase 2*pi*spacing*(y*sin(az)*cos(el) + z*sin(el)).
/// Every entry has unit magnitude.
Eigen::VectorXcd steering_vector(const UraGeometry& geom, double azimuth, double elevation,
                                 double spacing_over_lambda);

/// Draws one clustered multipath channel realization: Poisson cluster and
/// ray counts, exponential inter-arrival delays, double-exponential power
/// decay, a single line-of-sight ray holding the configured share of the
/// total power, and circular Gaussian ray gains. The result is scaled so the
/// average entry power of the realization is one.
ChannelMatrix generate_sv(const SvParams& params, const UraGeometry& rx_geom,
                          const UraGeometry& tx_geom, RngStream& rng);

}  // namespace gpchan
