#include "gpchan/pilot.hpp"

#include <cmath>
#include <stdexcept>

namespace gpchan {

Eigen::MatrixXcd design_pilots(int n_active, int length) {
  if (n_active < 1) throw std::invalid_argument("design_pilots: need at least one active antenna");
  if (length < n_active)
    throw std::invalid_argument("design_pilots: pilot length " + std::to_string(length) +
                                " shorter than active count " + std::to_string(n_active));
  Eigen::MatrixXcd s(n_active, length);
  const double scale = 1.0 / std::sqrt(static_cast<double>(length));
  for (int k = 0; k < n_active; ++k)
    for (int t = 0; t < length; ++t) {
      const double phase = -2.0 * M_PI * static_cast<double>(k) * t / length;
      s(k, t) = scale * std::complex<double>(std::cos(phase), std::sin(phase));
    }
  return s;
}

Eigen::MatrixXcd transmit_and_receive(const ChannelMatrix& h, const ActiveSet& omega,
                                      const Eigen::MatrixXcd& pilots, double p_active,
                                      double sigma_n_sq, RngStream& rng) {
  if (p_active <= 0.0) throw std::invalid_argument("transmit_and_receive: power must be positive");
  if (sigma_n_sq < 0.0)
    throw std::invalid_argument("transmit_and_receive: negative noise variance");
  if (omega.array_size() != h.cols())
    throw std::invalid_argument("transmit_and_receive: active set does not match channel width");
  if (pilots.rows() != omega.size())
    throw std::invalid_argument("transmit_and_receive: pilot rows must equal active count");

  const Eigen::Index n_rx = h.rows(), t_len = pilots.cols();
  Eigen::MatrixXcd active(n_rx, omega.size());
  for (int l = 0; l < omega.size(); ++l) active.col(l) = h.col(omega.indices()[l] - 1);

  Eigen::MatrixXcd y = std::sqrt(p_active) * (active * pilots);
  if (sigma_n_sq > 0.0) {
    const double sd = std::sqrt(sigma_n_sq);
    for (Eigen::Index t = 0; t < t_len; ++t)
      for (Eigen::Index i = 0; i < n_rx; ++i) y(i, t) += sd * rng.complex_normal();
  }
  return y;
}

Eigen::MatrixXcd matched_filter(const Eigen::MatrixXcd& received, const Eigen::MatrixXcd& pilots,
                                double p_active) {
  if (p_active <= 0.0) throw std::invalid_argument("matched_filter: power must be positive");
  const Eigen::MatrixXcd gram = pilots * pilots.adjoint();
  const double defect =
      (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (defect > 1e-10)
    throw std::invalid_argument(
        "matched_filter: pilots are not row-orthonormal (defect " + std::to_string(defect) +
        "); whitening for colored post-filter noise is not supported");
  return (received * pilots.adjoint()) / std::sqrt(p_active);
}

ObservationSet build_observations(const Eigen::MatrixXcd& z_mat, const ActiveSet& omega, int n_rx,
                                  double sigma_obs_sq) {
  if (z_mat.rows() != n_rx || z_mat.cols() != omega.size())
    throw std::invalid_argument("build_observations: matrix shape does not match grid");
  if (sigma_obs_sq < 0.0) throw std::invalid_argument("build_observations: negative variance");

  ObservationSet obs;
  obs.grid = training_grid(n_rx, omega);
  const Eigen::Index p = static_cast<Eigen::Index>(obs.grid.size());
  obs.z.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const IndexPair& pt = obs.grid[static_cast<size_t>(k)];
    // grid order is receive-fastest, i.e. vec of the n_rx x n_active block
    const int col = [&] {
      for (int l = 0; l < omega.size(); ++l)
        if (omega.indices()[l] == pt.tx) return l;
      throw std::logic_error("build_observations: grid/omega mismatch");
    }();
    obs.z[k] = z_mat(pt.rx - 1, col);
  }
  obs.z_icm.resize(2 * p);
  obs.z_icm.head(p) = obs.z.real();
  obs.z_icm.tail(p) = obs.z.imag();
  obs.sigma_obs_sq = sigma_obs_sq;
  obs.sigma_r_sq = 0.5 * sigma_obs_sq;
  return obs;
}

double snr_to_noise(double snr_linear, int n_active, double p_active) {
  if (snr_linear <= 0.0) throw std::invalid_argument("snr_to_noise: snr must be positive");
  if (n_active < 1 || p_active <= 0.0) throw std::invalid_argument("snr_to_noise: invalid config");
  return n_active * p_active / snr_linear;
}

}  // namespace gpchan
