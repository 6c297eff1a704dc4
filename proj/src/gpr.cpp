#include "gpchan/gpr.hpp"

#include <cmath>
#include <stdexcept>

#include "gpchan/linalg.hpp"

namespace gpchan {

Posterior posterior(const HyperParams& hp, const ObservationSet& obs,
                    const std::vector<IndexPair>& x_star, const UraGeometry& rx_geom,
                    const UraGeometry& tx_geom, bool want_full_cov) {
  if (obs.grid.empty()) throw std::invalid_argument("posterior: empty observation set");
  if (x_star.empty()) throw std::invalid_argument("posterior: empty prediction grid");
  if (obs.z_icm.size() != 2 * static_cast<Eigen::Index>(obs.grid.size()))
    throw std::invalid_argument("posterior: observation stack does not match grid");

  // The model noise comes from the hyperparameter bundle; callers that fix
  // it to the known observation level set hp.noise_var = obs.sigma_r_sq.
  const GramBundle bundle = build_gram_bundle(hp, obs.grid, rx_geom, tx_geom);
  const SpdFactor chol = spd_factorize_gp(bundle.c_theta);

  const Eigen::Matrix2d coupling = icm_coupling(hp.icm);
  const Eigen::MatrixXd cross_base = assemble_gram(hp, x_star, obs.grid, rx_geom, tx_geom);
  const Eigen::MatrixXd cross = lift_icm(cross_base, coupling);  // 2P* x 2P

  Posterior post;
  post.jitter_used = chol.jitter_used();
  post.mean = cross * chol.solve(obs.z_icm);

  // Predictive variance via the half solve: V = L^-1 K_x*, then
  // K** - V^T V.
  const Eigen::MatrixXd v = chol.half_solve(cross.transpose());
  if (want_full_cov) {
    const Eigen::MatrixXd star_base = assemble_gram(hp, x_star, x_star, rx_geom, tx_geom);
    post.cov_full = lift_icm(star_base, coupling);
    post.cov_full.noalias() -= v.transpose() * v;
    post.cov_diag = post.cov_full.diagonal();
  } else {
    // The lattice kernel is stationary, so the prior variance is the same
    // zero-lag value at every prediction point.
    const Eigen::Index ps = static_cast<Eigen::Index>(x_star.size());
    post.cov_diag.resize(2 * ps);
    const double prior_side = hp.amplitude * side_eval(hp.rx, {0, 0}) * side_eval(hp.tx, {0, 0});
    for (Eigen::Index q = 0; q < ps; ++q) {
      post.cov_diag[q] = prior_side * coupling(0, 0) - v.col(q).squaredNorm();
      post.cov_diag[ps + q] = prior_side * coupling(1, 1) - v.col(ps + q).squaredNorm();
    }
  }
  return post;
}

ChannelMatrix reconstruct(const Eigen::VectorXd& stacked_mean, const std::vector<IndexPair>& grid,
                          int n_rx, int n_tx) {
  const Eigen::Index ps = static_cast<Eigen::Index>(grid.size());
  if (stacked_mean.size() != 2 * ps)
    throw std::invalid_argument("reconstruct: mean length does not match grid");
  if (ps != static_cast<Eigen::Index>(n_rx) * n_tx)
    throw std::invalid_argument("reconstruct: grid does not cover the full array");

  ChannelMatrix h(n_rx, n_tx);
  std::vector<char> seen(static_cast<size_t>(n_rx) * n_tx, 0);
  for (Eigen::Index q = 0; q < ps; ++q) {
    const IndexPair& pt = grid[static_cast<size_t>(q)];
    if (pt.rx < 1 || pt.rx > n_rx || pt.tx < 1 || pt.tx > n_tx)
      throw std::invalid_argument("reconstruct: grid point out of range");
    const size_t flat = static_cast<size_t>(flat_index(pt, n_rx));
    if (seen[flat]) throw std::invalid_argument("reconstruct: duplicate grid point");
    seen[flat] = 1;
    h(pt.rx - 1, pt.tx - 1) = std::complex<double>(stacked_mean[q], stacked_mean[ps + q]);
  }
  for (char s : seen)
    if (!s) throw std::invalid_argument("reconstruct: grid does not cover every entry");
  return h;
}

CredibleInterval credible_interval(const Posterior& post, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("credible_interval: level in (0,1) required");
  const double z = normal_two_sided_quantile(level);
  CredibleInterval ci;
  const Eigen::ArrayXd sd = post.cov_diag.array().max(0.0).sqrt();
  ci.lo = post.mean.array() - z * sd;
  ci.hi = post.mean.array() + z * sd;
  return ci;
}

}  // namespace gpchan
