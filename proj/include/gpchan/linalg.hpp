#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gpchan {

/// Symmetric factorization failed even after exhausting the jitter ladder.
class NotPositiveDefiniteError : public std::runtime_error {
 public:
  NotPositiveDefiniteError(const std::string& what, double min_eig)
      : std::runtime_error(what), min_eigenvalue_(min_eig) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// Cholesky factor of (M + jitter * I).
class SpdFactor {
 public:
  SpdFactor(Eigen::MatrixXd lower, double jitter_used);

  const Eigen::MatrixXd& factor_lower() const { return lower_; }
  double jitter_used() const { return jitter_used_; }
  double log_det() const { return log_det_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  /// Explicit inverse assembled from triangular solves.
  Eigen::MatrixXd inverse() const;
  /// L^{-1} B, the half-solve used for predictive variances.
  Eigen::MatrixXd half_solve(const Eigen::MatrixXd& b) const;

 private:
  Eigen::MatrixXd lower_;
  double jitter_used_;
  double log_det_;
};

/// Default jitter ladder, relative to the mean diagonal of the input.
inline const std::vector<double>& default_jitter_ladder() {
  static const std::vector<double> ladder = {0.0, 1e-8, 1e-6, 1e-4};
  return ladder;
}

/// Factorizes with the smallest ladder jitter that succeeds. Ladder entries
/// are relative; the effective jitter is entry * mean(diag(m)).
SpdFactor spd_factorize(const Eigen::MatrixXd& m,
                        const std::vector<double>& jitter_ladder_rel = default_jitter_ladder());

/// Factorization for the GP covariance paths: a fixed absolute base jitter
/// (so the jittered likelihood stays an exact function of the kernel
/// parameters), then scale-relative escalation rungs as bounded recovery.
inline constexpr double kGpBaseJitter = 1e-8;
SpdFactor spd_factorize_gp(const Eigen::MatrixXd& m);

double min_eigenvalue(const Eigen::MatrixXd& sym);

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Two-sided standard normal quantile helper: returns z with
/// P(|N(0,1)| <= z) = level.
double normal_two_sided_quantile(double level);

}  // namespace gpchan
