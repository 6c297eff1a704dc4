#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpchan/kernel.hpp"
#include "gpchan/pilot.hpp"

namespace gpchan {

/// Every restart failed to factorize the training covariance; callers fall
/// back to the initialization.
class UnlearnableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How unconstrained coordinates map to native kernel parameters:
/// exp for amplitude, weights, variances and the diagonal coupling entries,
/// tanh/2 for the frequencies, identity for the off-diagonal coupling.
/// Native values are clamped into the boxes afterwards.
struct ReparamSpec {
  int q_rx = 3;
  int q_tx = 3;
  HyperBounds bounds;
  bool learn_noise = false;
  double fixed_noise_var = 0.0;  // used when learn_noise is false
  int size() const { return raw_param_count(q_rx, q_tx); }
};

HyperParams reparam_forward(const Eigen::VectorXd& raw, const ReparamSpec& spec);
/// Inverse map; exact for natives strictly inside the boxes.
Eigen::VectorXd reparam_inverse(const HyperParams& hp, const ReparamSpec& spec);

/// Gaussian evidence of the stacked observations:
/// -z^T C^-1 z / 2 - log det(C) / 2 - P log(2pi), with P the number of
/// complex observations and C the jittered training covariance built from
/// hp (including hp.noise_var as the per-task noise).
double log_marginal_likelihood(const HyperParams& hp, const ObservationSet& obs,
                               const UraGeometry& rx_geom, const UraGeometry& tx_geom);

/// Evidence gradient over the raw coordinate layout, via
/// tr[(alpha alpha^T - C^-1) dC/d(raw)] / 2 with alpha = C^-1 z. The
/// two-task block structure of dC is used directly instead of forming
/// alpha alpha^T or the stacked derivative matrices.
Eigen::VectorXd lml_gradient(const HyperParams& hp, const ObservationSet& obs,
                             const UraGeometry& rx_geom, const UraGeometry& tx_geom);

struct LearnConfig {
  int restarts = 4;
  int max_iters = 200;
  double rel_tol = 1e-6;  // on |delta LML| / (1 + |LML|)
  double grad_tol = 1e-5;  // infinity norm of the projected gradient
  bool learn_noise = false;
  int q_rx = 3;
  int q_tx = 3;
  HyperBounds bounds;
  std::uint64_t seed = 0;
  int lbfgs_memory = 10;
};

struct OptimizerReport {
  HyperParams best_theta;
  Eigen::VectorXd best_raw;
  double best_lml = 0.0;
  int restarts_run = 0;
  std::vector<int> iterations;      // per restart
  std::vector<char> converged;      // per restart
  double gradient_norm_final = 0.0; // projected infinity norm at the winner
  std::vector<std::string> escalations;  // jitter events beyond the base rung
};

/// First-restart initialization: unit-sum weights, mid-box variances,
/// lightly staggered frequencies, identity coupling, and the amplitude set
/// so the prior marginal variance matches the sample variance of the data.
Eigen::VectorXd variance_matched_init(const ObservationSet& obs, const ReparamSpec& spec);

/// Multi-start projected quasi-Newton ascent of the evidence under the
/// native boxes. Accepted steps are monotone within each restart; the best
/// restart wins, with ties broken by smaller raw-coordinate norm.
OptimizerReport optimize(const ObservationSet& obs, const UraGeometry& rx_geom,
                         const UraGeometry& tx_geom, const LearnConfig& cfg);

}  // namespace gpchan
