#include "gpchan/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpchan {

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

// Flat indices (into the full vectorization) of the observed entries.
std::vector<int> observed_rows(const ObservationSet& obs, int n_rx) {
  std::vector<int> rows(obs.grid.size());
  for (size_t k = 0; k < obs.grid.size(); ++k) rows[k] = flat_index(obs.grid[k], n_rx);
  return rows;
}

Eigen::MatrixXcd dft_frame(int n, int oversampling) {
  const int m = n * oversampling;
  Eigen::MatrixXcd f(n, m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int y = 0; y < n; ++y)
    for (int k = 0; k < m; ++k) {
      const double phase = -2.0 * M_PI * static_cast<double>(y) * k / m;
      f(y, k) = scale * std::complex<double>(std::cos(phase), std::sin(phase));
    }
  return f;
}

Eigen::MatrixXcd kron_cd(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

IsoPrior make_ura_iso_prior(const UraGeometry& rx_geom, const UraGeometry& tx_geom, double lambda,
                            double spacing_over_lambda, double sigma_h_sq,
                            double plane_gap_lambda) {
  if (lambda <= 0.0 || sigma_h_sq <= 0.0)
    throw std::invalid_argument("make_ura_iso_prior: invalid parameters");
  const double d = spacing_over_lambda * lambda;
  auto element_pos = [&](const UraGeometry& g, int index, double x_off) {
    const LatticeCoord c = coords_of(index, g);
    return Eigen::Vector3d(x_off, c.y * d, c.z * d);
  };
  IsoPrior prior;
  prior.sigma_h_sq = sigma_h_sq;
  prior.lambda = lambda;
  prior.positions.reserve(static_cast<size_t>(rx_geom.total()) * tx_geom.total());
  // Receive-fastest order, matching the channel vectorization.
  for (int tx = 1; tx <= tx_geom.total(); ++tx)
    for (int rx = 1; rx <= rx_geom.total(); ++rx)
      prior.positions.push_back(element_pos(rx_geom, rx, 0.0) +
                                element_pos(tx_geom, tx, plane_gap_lambda * lambda));
  return prior;
}

Eigen::MatrixXd iso_prior_covariance(const IsoPrior& prior) {
  const Eigen::Index n = static_cast<Eigen::Index>(prior.positions.size());
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    r(a, a) = prior.sigma_h_sq;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double dist = (prior.positions[a] - prior.positions[b]).norm();
      const double v = prior.sigma_h_sq * sinc(2.0 * dist / prior.lambda);
      r(a, b) = v;
      r(b, a) = v;
    }
  }
  return r;
}

ChannelMatrix ls_estimate(const Eigen::MatrixXcd& z_mat, const ActiveSet& omega, int n_tx) {
  if (z_mat.cols() != omega.size())
    throw std::invalid_argument("ls_estimate: column count does not match active set");
  ChannelMatrix h = ChannelMatrix::Zero(z_mat.rows(), n_tx);
  for (int l = 0; l < omega.size(); ++l) h.col(omega.indices()[l] - 1) = z_mat.col(l);
  return h;
}

ChannelMatrix mmse_isotropic(const ObservationSet& obs, const IsoPrior& prior, int n_rx,
                             int n_tx) {
  const Eigen::Index n = static_cast<Eigen::Index>(n_rx) * n_tx;
  if (static_cast<Eigen::Index>(prior.positions.size()) != n)
    throw std::invalid_argument("mmse_isotropic: prior does not match the array");
  const std::vector<int> rows = observed_rows(obs, n_rx);
  const Eigen::Index p = static_cast<Eigen::Index>(rows.size());

  const Eigen::MatrixXd r_full = iso_prior_covariance(prior);
  Eigen::MatrixXd r_cross(n, p);  // R A^H
  Eigen::MatrixXd r_obs(p, p);    // A R A^H
  for (Eigen::Index k = 0; k < p; ++k) r_cross.col(k) = r_full.col(rows[k]);
  for (Eigen::Index k = 0; k < p; ++k)
    for (Eigen::Index l = 0; l < p; ++l) r_obs(k, l) = r_full(rows[k], rows[l]);
  r_obs.diagonal().array() += obs.sigma_obs_sq;

  Eigen::LDLT<Eigen::MatrixXd> solver(r_obs);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("mmse_isotropic: regularized system is singular");
  // Real prior, complex data: solve against the real and imaginary parts.
  Eigen::MatrixXd rhs(p, 2);
  rhs.col(0) = obs.z.real();
  rhs.col(1) = obs.z.imag();
  const Eigen::MatrixXd sol = solver.solve(rhs);
  const Eigen::VectorXd est_re = r_cross * sol.col(0);
  const Eigen::VectorXd est_im = r_cross * sol.col(1);

  ChannelMatrix h(n_rx, n_tx);
  for (Eigen::Index f = 0; f < n; ++f)
    h(f % n_rx, f / n_rx) = std::complex<double>(est_re[f], est_im[f]);
  return h;
}

Eigen::MatrixXcd angular_dictionary(const UraGeometry& rx_geom, const UraGeometry& tx_geom,
                                    int oversampling) {
  if (oversampling < 1) throw std::invalid_argument("angular_dictionary: oversampling >= 1");
  // Per-array 2-D transform with the lattice y index fastest, matching
  // coords_of. vec(H) = (conj(U_tx) kron U_rx) x.
  const Eigen::MatrixXcd u_rx =
      kron_cd(dft_frame(rx_geom.nz, oversampling), dft_frame(rx_geom.ny, oversampling));
  const Eigen::MatrixXcd u_tx =
      kron_cd(dft_frame(tx_geom.nz, oversampling), dft_frame(tx_geom.ny, oversampling));
  return kron_cd(u_tx.conjugate(), u_rx);
}

ChannelMatrix omp_estimate(const ObservationSet& obs, const SparseRecoveryConfig& cfg,
                           const UraGeometry& rx_geom, const UraGeometry& tx_geom) {
  if (cfg.omp_sparsity < 1) throw std::invalid_argument("omp_estimate: sparsity must be >= 1");
  const int n_rx = rx_geom.total(), n_tx = tx_geom.total();
  const Eigen::MatrixXcd dict = angular_dictionary(rx_geom, tx_geom, cfg.oversampling);
  const std::vector<int> rows = observed_rows(obs, n_rx);
  const Eigen::Index p = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXcd dict_obs(p, dict.cols());
  for (Eigen::Index k = 0; k < p; ++k) dict_obs.row(k) = dict.row(rows[k]);

  Eigen::VectorXcd residual = obs.z;
  std::vector<Eigen::Index> support;
  Eigen::VectorXcd coeffs;
  const int k_max = std::min<int>(cfg.omp_sparsity, static_cast<int>(dict.cols()));
  for (int it = 0; it < k_max; ++it) {
    // Most correlated unselected atom.
    Eigen::VectorXd corr = (dict_obs.adjoint() * residual).cwiseAbs();
    for (Eigen::Index s : support) corr[s] = -1.0;
    Eigen::Index pick;
    corr.maxCoeff(&pick);
    support.push_back(pick);

    Eigen::MatrixXcd sub(p, support.size());
    for (size_t c = 0; c < support.size(); ++c) sub.col(c) = dict_obs.col(support[c]);
    coeffs = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd>(sub).solve(obs.z);
    residual = obs.z - sub * coeffs;
  }

  Eigen::VectorXcd h_vec = Eigen::VectorXcd::Zero(dict.rows());
  for (size_t c = 0; c < support.size(); ++c) h_vec += coeffs[c] * dict.col(support[c]);
  ChannelMatrix h(n_rx, n_tx);
  for (Eigen::Index f = 0; f < h_vec.size(); ++f) h(f % n_rx, f / n_rx) = h_vec[f];
  return h;
}

std::complex<double> soft_threshold(std::complex<double> v, double t) {
  const double mag = std::abs(v);
  if (mag <= t) return {0.0, 0.0};
  return v * ((mag - t) / mag);
}

AmpResult amp_estimate(const ObservationSet& obs, const SparseRecoveryConfig& cfg,
                       const UraGeometry& rx_geom, const UraGeometry& tx_geom) {
  if (cfg.amp_iters < 1 || cfg.amp_threshold <= 0.0)
    throw std::invalid_argument("amp_estimate: invalid config");
  const int n_rx = rx_geom.total(), n_tx = tx_geom.total();
  const Eigen::MatrixXcd dict = angular_dictionary(rx_geom, tx_geom, cfg.oversampling);
  const std::vector<int> rows = observed_rows(obs, n_rx);
  const Eigen::Index p = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXcd a(p, dict.cols());
  for (Eigen::Index k = 0; k < p; ++k) a.row(k) = dict.row(rows[k]);

  AmpResult result;
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(dict.cols());
  Eigen::VectorXcd r = obs.z;
  const double r0_norm = r.norm();
  if (r0_norm == 0.0) {
    result.estimate = ChannelMatrix::Zero(n_rx, n_tx);
    return result;
  }

  Eigen::VectorXcd best_x = x;
  double best_res = r0_norm;
  double prev_res = r0_norm;

  // Median |r| of circular Gaussian noise is sigma * sqrt(ln 2).
  auto noise_level = [&](const Eigen::VectorXcd& res) {
    Eigen::VectorXd mags = res.cwiseAbs();
    std::vector<double> v(mags.data(), mags.data() + mags.size());
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2] / std::sqrt(std::log(2.0));
  };

  int it = 0;
  for (; it < cfg.amp_iters; ++it) {
    const Eigen::VectorXcd pseudo = x + a.adjoint() * r;
    const double lambda = cfg.amp_threshold * noise_level(r);
    Eigen::VectorXcd x_new(pseudo.size());
    Eigen::Index active = 0;
    for (Eigen::Index i = 0; i < pseudo.size(); ++i) {
      x_new[i] = soft_threshold(pseudo[i], lambda);
      if (x_new[i] != std::complex<double>(0.0, 0.0)) ++active;
    }
    // Onsager term: residual memory weighted by the active fraction.
    const double onsager = static_cast<double>(active) / static_cast<double>(p);
    r = obs.z - a * x_new + onsager * r;
    x = std::move(x_new);

    const double res = r.norm();
    if (res < best_res) {
      best_res = res;
      best_x = x;
    }
    if (res > 1e3 * r0_norm) {
      result.diverged = true;
      break;
    }
    if (std::abs(res - prev_res) < 1e-6 * std::max(prev_res, 1e-300)) {
      ++it;
      break;
    }
    prev_res = res;
  }
  result.iterations = it;

  const Eigen::VectorXcd& x_final = result.diverged ? best_x : x;
  Eigen::VectorXcd h_vec = dict * x_final;
  ChannelMatrix h(n_rx, n_tx);
  for (Eigen::Index f = 0; f < h_vec.size(); ++f) h(f % n_rx, f / n_rx) = h_vec[f];
  result.estimate = std::move(h);
  return result;
}

}  // namespace gpchan
