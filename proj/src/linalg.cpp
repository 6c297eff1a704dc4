#include "gpchan/linalg.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace gpchan {

SpdFactor::SpdFactor(Eigen::MatrixXd lower, double jitter_used)
    : lower_(std::move(lower)), jitter_used_(jitter_used) {
  log_det_ = 2.0 * lower_.diagonal().array().log().sum();
}

Eigen::VectorXd SpdFactor::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd y = lower_.triangularView<Eigen::Lower>().solve(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd SpdFactor::solve(const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd y = lower_.triangularView<Eigen::Lower>().solve(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd SpdFactor::half_solve(const Eigen::MatrixXd& b) const {
  return lower_.triangularView<Eigen::Lower>().solve(b);
}

Eigen::MatrixXd SpdFactor::inverse() const {
  const Eigen::Index n = lower_.rows();
  Eigen::MatrixXd linv =
      lower_.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  return linv.transpose() * linv;
}

SpdFactor spd_factorize(const Eigen::MatrixXd& m, const std::vector<double>& jitter_ladder_rel) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spd_factorize: matrix must be square");
  const Eigen::Index n = m.rows();
  double mean_diag = m.diagonal().mean();
  const double scale = mean_diag > 0.0 ? mean_diag : 1.0;

  Eigen::LLT<Eigen::MatrixXd> llt;
  for (double rel : jitter_ladder_rel) {
    const double jitter = rel * scale;
    Eigen::MatrixXd shifted = m;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      return SpdFactor(llt.matrixL(), jitter);
    }
  }
  const double min_eig = min_eigenvalue(m);
  throw NotPositiveDefiniteError(
      "spd_factorize: not positive definite after jitter ladder (min eigenvalue " +
          std::to_string(min_eig) + ", dim " + std::to_string(n) + ")",
      min_eig);
}

SpdFactor spd_factorize_gp(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::LLT<Eigen::MatrixXd> llt;
  {
    Eigen::MatrixXd shifted = m;
    shifted.diagonal().array() += kGpBaseJitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return SpdFactor(llt.matrixL(), kGpBaseJitter);
  }
  const double scale = std::max(m.diagonal().mean(), 0.0);
  for (double rel : {1e-6, 1e-4}) {
    const double jitter = kGpBaseJitter + rel * scale;
    Eigen::MatrixXd shifted = m;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return SpdFactor(llt.matrixL(), jitter);
  }
  const double min_eig = min_eigenvalue(m);
  throw NotPositiveDefiniteError(
      "spd_factorize_gp: not positive definite after jitter ladder (min eigenvalue " +
          std::to_string(min_eig) + ", dim " + std::to_string(n) + ")",
      min_eig);
}

double min_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace {

// Acklam's rational approximation to the standard normal quantile,
// polished with one Halley step on the erfc form.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p in (0,1) required");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley refinement.
  double e = 0.5 * std::erfc(-x * M_SQRT1_2) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace

double normal_two_sided_quantile(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("normal_two_sided_quantile: level in (0,1) required");
  return normal_quantile(0.5 * (1.0 + level));
}

}  // namespace gpchan
