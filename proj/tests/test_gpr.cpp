#include <doctest.h>

#include <cmath>

#include "gpchan/checks.hpp"
#include "gpchan/gpr.hpp"
#include "gpchan/linalg.hpp"

using namespace gpchan;

namespace {

struct OracleResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Direct partitioned-Gaussian conditioning on the joint prior over the
// concatenated grid, with explicit inversion. Conditions on the same
// jittered matrix the implementation factorizes.
OracleResult condition_by_partition(const HyperParams& hp, const ObservationSet& obs,
                                    const std::vector<IndexPair>& x_star,
                                    const UraGeometry& rx_geom, const UraGeometry& tx_geom) {
  std::vector<IndexPair> joint = obs.grid;
  joint.insert(joint.end(), x_star.begin(), x_star.end());
  const Eigen::Index p = static_cast<Eigen::Index>(obs.grid.size());
  const Eigen::Index ps = static_cast<Eigen::Index>(x_star.size());
  const Eigen::Index n = p + ps;

  const Eigen::MatrixXd base = assemble_gram(hp, joint, joint, rx_geom, tx_geom);
  const Eigen::MatrixXd lifted = lift_icm(base, icm_coupling(hp.icm));  // 2n x 2n, block layout

  // Task-block layout over the joint grid: training entries occupy rows
  // {0..p-1} and {n..n+p-1}.
  std::vector<Eigen::Index> train_idx(2 * p), star_idx(2 * ps);
  for (Eigen::Index k = 0; k < p; ++k) {
    train_idx[k] = k;
    train_idx[p + k] = n + k;
  }
  for (Eigen::Index k = 0; k < ps; ++k) {
    star_idx[k] = p + k;
    star_idx[ps + k] = n + p + k;
  }

  auto pick = [&](const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols) {
    Eigen::MatrixXd m(rows.size(), cols.size());
    for (size_t a = 0; a < rows.size(); ++a)
      for (size_t b = 0; b < cols.size(); ++b) m(a, b) = lifted(rows[a], cols[b]);
    return m;
  };

  Eigen::MatrixXd s11 = pick(train_idx, train_idx);
  s11.diagonal().array() += hp.noise_var + kGpBaseJitter;
  const Eigen::MatrixXd s21 = pick(star_idx, train_idx);
  const Eigen::MatrixXd s22 = pick(star_idx, star_idx);

  const Eigen::MatrixXd s11_inv = s11.inverse();
  OracleResult out;
  out.mean = s21 * s11_inv * obs.z_icm;
  out.cov = s22 - s21 * s11_inv * s21.transpose();
  return out;
}

ObservationSet synthetic_obs(const std::vector<IndexPair>& grid, const Eigen::VectorXd& z_icm,
                             double sigma_r_sq) {
  ObservationSet obs;
  obs.grid = grid;
  obs.z_icm = z_icm;
  const Eigen::Index p = static_cast<Eigen::Index>(grid.size());
  obs.z.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) obs.z[k] = {z_icm[k], z_icm[p + k]};
  obs.sigma_r_sq = sigma_r_sq;
  obs.sigma_obs_sq = 2.0 * sigma_r_sq;
  return obs;
}

}  // namespace

TEST_CASE("posterior: noiseless prediction at the training points interpolates") {
  RngStream rng(31);
  // A well-conditioned kernel (fast envelope decay) keeps the jittered
  // noiseless solve close to exact interpolation.
  HyperParams hp;
  hp.amplitude = 1.0;
  hp.rx.assign(1, SmComponent{1.0, 0.12, -0.08, 0.09, 0.09});
  hp.tx.assign(1, SmComponent{1.0, -0.05, 0.10, 0.09, 0.09});
  hp.icm = {1.0, 0.3, 0.9};
  hp.noise_var = 0.0;
  const UraGeometry rx{2, 2}, tx{2, 2};
  const auto grid = training_grid(4, equispaced_subset(4, 2));
  const Eigen::VectorXd z = rng.normal_vector(2 * static_cast<Eigen::Index>(grid.size()));
  const ObservationSet obs = synthetic_obs(grid, z, 0.0);

  const Posterior post = posterior(hp, obs, grid, rx, tx);
  CHECK((post.mean - z).norm() / z.norm() < 1e-6);
}

TEST_CASE("posterior: zero data keeps the zero prior mean; infinite noise returns the prior") {
  RngStream rng(32);
  HyperParams hp = draw_hyperparams(rng);
  hp.noise_var = 0.3;
  const UraGeometry rx{2, 2}, tx{2, 2};
  const auto grid = training_grid(4, equispaced_subset(4, 2));
  const auto star = prediction_grid(4, 4, PredictionMode::kMissingOnly, equispaced_subset(4, 2));
  const Eigen::Index p = static_cast<Eigen::Index>(grid.size());

  const ObservationSet zero_obs = synthetic_obs(grid, Eigen::VectorXd::Zero(2 * p), 0.3);
  const Posterior post = posterior(hp, zero_obs, star, rx, tx);
  CHECK(post.mean.norm() == 0.0);

  // No-information limit: the predictive covariance approaches the prior.
  HyperParams deaf = hp;
  deaf.noise_var = 1e12;
  ObservationSet loud = zero_obs;
  loud.sigma_r_sq = 1e12;
  const Posterior prior_like = posterior(deaf, loud, star, rx, tx, /*want_full_cov=*/true);
  const Eigen::MatrixXd prior =
      lift_icm(assemble_gram(hp, star, star, rx, tx), icm_coupling(hp.icm));
  CHECK((prior_like.cov_full - prior).cwiseAbs().maxCoeff() < 1e-9 * prior.cwiseAbs().maxCoeff());
}

TEST_CASE("posterior: matches partitioned conditioning on random small instances") {
  RngStream root(33);
  for (int s = 0; s < 25; ++s) {
    RngStream rng = root.split(static_cast<std::uint64_t>(s));
    HyperParams hp = draw_hyperparams(rng);
    const UraGeometry rx{2, 1}, tx{2, 2};
    const int n_active = 1 + static_cast<int>(rng.uniform_index(2));
    const ActiveSet omega = equispaced_subset(4, n_active);
    const auto grid = training_grid(2, omega);  // P in {2, 4}
    std::vector<IndexPair> star;
    for (const auto& pt : prediction_grid(2, 4, PredictionMode::kMissingOnly, omega))
      if (star.size() < 4) star.push_back(pt);

    const Eigen::Index p = static_cast<Eigen::Index>(grid.size());
    const Eigen::VectorXd z = 1.2 * rng.normal_vector(2 * p);
    const ObservationSet obs = synthetic_obs(grid, z, hp.noise_var);

    const Posterior post = posterior(hp, obs, star, rx, tx, /*want_full_cov=*/true);
    const OracleResult oracle = condition_by_partition(hp, obs, star, rx, tx);

    const double mean_scale = std::max(1e-12, oracle.mean.norm());
    const double cov_scale = std::max(1e-12, oracle.cov.norm());
    CHECK((post.mean - oracle.mean).norm() / mean_scale < 1e-8);
    CHECK((post.cov_full - oracle.cov).norm() / cov_scale < 1e-8);
    CHECK((post.cov_diag - post.cov_full.diagonal()).norm() < 1e-12);
  }
}

TEST_CASE("posterior: variance never exceeds the prior and shrinks with more data") {
  RngStream rng(34);
  HyperParams hp = draw_hyperparams(rng);
  hp.noise_var = 0.2;
  const UraGeometry rx{2, 2}, tx{2, 2};
  const auto star = prediction_grid(4, 4, PredictionMode::kFull, equispaced_subset(4, 1));

  const auto grid_small = training_grid(4, ActiveSet({1}, 4));
  const auto grid_big = training_grid(4, ActiveSet({1, 3}, 4));

  const Eigen::Index p_small = static_cast<Eigen::Index>(grid_small.size());
  const Eigen::Index p_big = static_cast<Eigen::Index>(grid_big.size());
  const Eigen::VectorXd z_big = rng.normal_vector(2 * p_big);
  Eigen::VectorXd z_small(2 * p_small);
  z_small.head(p_small) = z_big.head(p_small);
  z_small.tail(p_small) = z_big.segment(p_big, p_small);

  const Posterior post_small =
      posterior(hp, synthetic_obs(grid_small, z_small, 0.2), star, rx, tx);
  const Posterior post_big = posterior(hp, synthetic_obs(grid_big, z_big, 0.2), star, rx, tx);

  const Eigen::Matrix2d b = icm_coupling(hp.icm);
  double wr = 0.0, wt = 0.0;
  for (const auto& c : hp.rx) wr += c.weight;
  for (const auto& c : hp.tx) wt += c.weight;
  const Eigen::Index ps = static_cast<Eigen::Index>(star.size());
  for (Eigen::Index q = 0; q < ps; ++q) {
    const double prior_re = hp.amplitude * wr * wt * b(0, 0);
    const double prior_im = hp.amplitude * wr * wt * b(1, 1);
    CHECK(post_small.cov_diag[q] <= prior_re + 1e-8);
    CHECK(post_small.cov_diag[ps + q] <= prior_im + 1e-8);
    // observations only shrink the posterior
    CHECK(post_big.cov_diag[q] <= post_small.cov_diag[q] + 1e-8);
    CHECK(post_big.cov_diag[ps + q] <= post_small.cov_diag[ps + q] + 1e-8);
  }
}

TEST_CASE("reconstruct: stacking, round trip, and coverage checks") {
  const std::vector<IndexPair> one{{1, 1}};
  Eigen::VectorXd m(2);
  m << 3.0, 4.0;
  const ChannelMatrix h = reconstruct(m, one, 1, 1);
  CHECK(h(0, 0) == std::complex<double>(3.0, 4.0));

  // full-grid round trip
  RngStream rng(36);
  const int n_rx = 3, n_tx = 2;
  ChannelMatrix truth(n_rx, n_tx);
  for (int i = 0; i < n_rx; ++i)
    for (int j = 0; j < n_tx; ++j) truth(i, j) = rng.complex_normal();
  const auto grid = prediction_grid(n_rx, n_tx, PredictionMode::kFull, ActiveSet({1}, n_tx));
  Eigen::VectorXd stacked(2 * n_rx * n_tx);
  for (size_t q = 0; q < grid.size(); ++q) {
    stacked[static_cast<Eigen::Index>(q)] = truth(grid[q].rx - 1, grid[q].tx - 1).real();
    stacked[static_cast<Eigen::Index>(q + grid.size())] =
        truth(grid[q].rx - 1, grid[q].tx - 1).imag();
  }
  CHECK((reconstruct(stacked, grid, n_rx, n_tx) - truth).cwiseAbs().maxCoeff() == 0.0);

  // missing-only plus observed covers every entry exactly once
  const ActiveSet omega({1}, n_tx);
  auto merged = prediction_grid(n_rx, n_tx, PredictionMode::kMissingOnly, omega);
  const auto train = training_grid(n_rx, omega);
  merged.insert(merged.end(), train.begin(), train.end());
  CHECK(merged.size() == static_cast<size_t>(n_rx) * n_tx);
  CHECK_NOTHROW((void)reconstruct(Eigen::VectorXd::Zero(2 * n_rx * n_tx), merged, n_rx, n_tx));

  // duplicated point rejected
  auto dup = merged;
  dup[0] = dup[1];
  CHECK_THROWS_AS((void)reconstruct(Eigen::VectorXd::Zero(2 * n_rx * n_tx), dup, n_rx, n_tx),
                  std::invalid_argument);
}

TEST_CASE("credible_interval: width and degenerate cases") {
  Posterior post;
  post.mean = Eigen::VectorXd::Zero(2);
  post.cov_diag = Eigen::VectorXd::Zero(2);
  const CredibleInterval flat = credible_interval(post, 0.95);
  CHECK(flat.lo == post.mean);
  CHECK(flat.hi == post.mean);

  post.cov_diag << 4.0, 1.0;
  const CredibleInterval ci = credible_interval(post, 0.95);
  CHECK(ci.hi[0] == doctest::Approx(2.0 * 1.959964).epsilon(1e-6));
  CHECK(ci.lo[1] == doctest::Approx(-1.959964).epsilon(1e-6));
  CHECK_THROWS_AS((void)credible_interval(post, 1.5), std::invalid_argument);
}

TEST_CASE("credible_interval: empirical coverage over prior draws") {
  RngStream root(37);
  HyperParams hp = draw_hyperparams(root);
  hp.noise_var = 0.15;
  const UraGeometry rx{2, 2}, tx{2, 2};
  const ActiveSet omega = equispaced_subset(4, 2);
  const auto grid = training_grid(4, omega);
  const auto star = prediction_grid(4, 4, PredictionMode::kMissingOnly, omega);
  const Eigen::Index p = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index ps = static_cast<Eigen::Index>(star.size());

  // Joint prior factor for sampling latent fields.
  std::vector<IndexPair> joint = grid;
  joint.insert(joint.end(), star.begin(), star.end());
  const Eigen::MatrixXd lifted =
      lift_icm(assemble_gram(hp, joint, joint, rx, tx), icm_coupling(hp.icm));
  const SpdFactor chol = spd_factorize_gp(lifted);
  const Eigen::Index n = p + ps;

  int inside = 0, total = 0;
  for (int rep = 0; rep < 500; ++rep) {
    RngStream rng = root.split(static_cast<std::uint64_t>(rep));
    const Eigen::VectorXd f = chol.factor_lower() * rng.normal_vector(2 * n);
    Eigen::VectorXd z(2 * p);
    for (Eigen::Index k = 0; k < p; ++k) {
      z[k] = f[k] + std::sqrt(hp.noise_var) * rng.normal();
      z[p + k] = f[n + k] + std::sqrt(hp.noise_var) * rng.normal();
    }
    const Posterior post = posterior(hp, synthetic_obs(grid, z, hp.noise_var), star, rx, tx);
    const CredibleInterval ci = credible_interval(post, 0.95);
    for (Eigen::Index q = 0; q < ps; ++q) {
      const double truth_re = f[p + q];
      const double truth_im = f[n + p + q];
      if (ci.lo[q] <= truth_re && truth_re <= ci.hi[q]) ++inside;
      if (ci.lo[ps + q] <= truth_im && truth_im <= ci.hi[ps + q]) ++inside;
      total += 2;
    }
  }
  const double coverage = static_cast<double>(inside) / total;
  CHECK(coverage > 0.92);
  CHECK(coverage < 0.98);
}
