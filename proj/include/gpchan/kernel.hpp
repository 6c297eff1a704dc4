#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpchan/lattice.hpp"

namespace gpchan {

/// One spectral-mixture component: Gaussian envelope times cosine carrier on
/// the 2-D antenna lattice.
struct SmComponent {
  double weight = 1.0;  // >= 0, relative cluster energy
  double freq_y = 0.0;  // mean spatial frequency in [-1/2, 1/2]
  double freq_z = 0.0;
  double var_y = 1e-2;  // spectral variance, > 0; larger means faster decay
  double var_z = 1e-2;
};

/// Cholesky parameterization of the 2x2 output-coupling matrix
/// B = L L^T with L = [[l00, 0], [l10, l11]], keeping B positive
/// semidefinite for any values with l00, l11 > 0.
struct IcmParams {
  double l00 = 1.0;
  double l10 = 0.0;
  double l11 = 1.0;
};

/// Full kernel parameter bundle: global amplitude, per-side spectral-mixture
/// components, output coupling, and the per-task observation noise variance.
struct HyperParams {
  double amplitude = 1.0;
  std::vector<SmComponent> rx;
  std::vector<SmComponent> tx;
  IcmParams icm;
  double noise_var = 0.0;  // per real task (half the complex noise variance)
};

/// Native-parameter boxes enforced during learning.
struct HyperBounds {
  double amp_min = 1e-3, amp_max = 30.0;
  double weight_min = 1e-4, weight_max = 10.0;
  double var_min = 6e-4, var_max = 0.1;
  double freq_abs_max = 0.5;
  double l_diag_min = 1e-6, l_diag_max = 10.0;
  double noise_min = 1e-8, noise_max = 1e3;
};

/// Sum over components of weight * exp(-(2pi)^2 [v_y dy^2 + v_z dz^2]) *
/// cos(2pi [f_y dy + f_z dz]). Even in delta.
double side_eval(const std::vector<SmComponent>& comps, const LatticeCoord& delta);

/// amplitude * side_eval(rx, dr) * side_eval(tx, dt); depends on the index
/// pairs only through the lattice differences.
double base_eval(const HyperParams& hp, const IndexPair& p, const IndexPair& q,
                 const UraGeometry& rx_geom, const UraGeometry& tx_geom);

Eigen::Matrix2d icm_coupling(const IcmParams& icm);

/// Base Gram matrix between two grids, assembled as the Hadamard product of
/// the per-side Grams scaled by the amplitude. Exactly symmetric when the
/// grids coincide.
Eigen::MatrixXd assemble_gram(const HyperParams& hp, const std::vector<IndexPair>& x1,
                              const std::vector<IndexPair>& x2, const UraGeometry& rx_geom,
                              const UraGeometry& tx_geom);

/// Lifts a base Gram block to the stacked two-task layout
/// [[B00 K, B01 K], [B10 K, B11 K]]; vectors are stored as
/// [real block; imaginary block] throughout.
Eigen::MatrixXd lift_icm(const Eigen::MatrixXd& base, const Eigen::Matrix2d& coupling);

struct GramBundle {
  Eigen::MatrixXd base;     // P x P
  Eigen::MatrixXd lifted;   // 2P x 2P, task-block layout
  Eigen::MatrixXd c_theta;  // lifted + noise_var * I
};

GramBundle build_gram_bundle(const HyperParams& hp, const std::vector<IndexPair>& grid,
                             const UraGeometry& rx_geom, const UraGeometry& tx_geom);

// Unconstrained coordinate layout shared with the learner:
//   [log amplitude,
//    per rx component (log w, raw f_y, raw f_z, log v_y, log v_z),
//    per tx component (same five),
//    t00, t10, t11,
//    log noise_var]
// where frequencies map through f = tanh(raw)/2 and l00 = exp(t00),
// l10 = t10, l11 = exp(t11).
int raw_param_count(int q_rx, int q_tx);
std::string raw_param_name(int i, int q_rx, int q_tx);

/// Per-coordinate derivatives of C_theta = lift(K_base, B) + noise_var * I
/// with respect to the raw layout above, evaluated at the native values in
/// `hp`. Derivatives of the base Gram and of the coupling separate, so each
/// full matrix is a lift of a P x P block or of K_base itself.
class GramDerivatives {
 public:
  GramDerivatives(const HyperParams& hp, const std::vector<IndexPair>& grid,
                  const UraGeometry& rx_geom, const UraGeometry& tx_geom);

  int count() const { return raw_param_count(q_rx_, q_tx_); }

  enum class Kind { kBase, kIcm, kNoise };
  Kind kind(int i) const;

  /// For Kind::kBase coordinates: d(K_base)/d(raw_i), P x P.
  void base_derivative(int i, Eigen::MatrixXd& out) const;
  /// For Kind::kIcm coordinates: dB/d(raw_i).
  Eigen::Matrix2d icm_derivative(int i) const;

  /// Full 2P x 2P derivative of C_theta for any coordinate.
  void derivative(int i, Eigen::MatrixXd& out) const;
  std::vector<Eigen::MatrixXd> all() const;

  const Eigen::MatrixXd& base() const { return base_; }
  const Eigen::Matrix2d& coupling() const { return coupling_; }
  double noise_var() const { return hp_.noise_var; }

 private:
  HyperParams hp_;
  int q_rx_, q_tx_;
  Eigen::Matrix2d coupling_;
  Eigen::MatrixXd base_;  // K_base(X, X)
  // Per-grid-point side coordinates.
  std::vector<LatticeCoord> rx_coords_, tx_coords_;
  UraGeometry rx_geom_, tx_geom_;
  // Cached per-side Gram matrices (unit amplitude).
  Eigen::MatrixXd side_rx_, side_tx_;
};

/// Flat text record, one "name value" pair per line. Round-trips exactly for
/// finite values.
std::string serialize_hyperparams(const HyperParams& hp);
HyperParams parse_hyperparams(const std::string& text);

}  // namespace gpchan
