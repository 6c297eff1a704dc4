#include "gpchan/checks.hpp"

#include <cmath>
#include <sstream>

#include "gpchan/learn.hpp"
#include "gpchan/linalg.hpp"

namespace gpchan {

namespace {

double log_uniform(RngStream& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

}  // namespace

HyperParams draw_hyperparams(RngStream& rng, const HyperDrawOptions& opts) {
  HyperParams hp;
  hp.amplitude = log_uniform(rng, opts.amp_lo, opts.amp_hi);
  auto draw_side = [&](int n) {
    std::vector<SmComponent> comps(n);
    for (auto& c : comps) {
      c.weight = log_uniform(rng, opts.weight_lo, opts.weight_hi);
      c.freq_y = rng.uniform(-opts.freq_abs, opts.freq_abs);
      c.freq_z = rng.uniform(-opts.freq_abs, opts.freq_abs);
      c.var_y = log_uniform(rng, opts.var_lo, opts.var_hi);
      c.var_z = log_uniform(rng, opts.var_lo, opts.var_hi);
    }
    return comps;
  };
  hp.rx = draw_side(opts.q_rx);
  hp.tx = draw_side(opts.q_tx);
  hp.icm.l00 = log_uniform(rng, opts.l_diag_lo, opts.l_diag_hi);
  hp.icm.l10 = rng.uniform(-opts.l_off_abs, opts.l_off_abs);
  hp.icm.l11 = log_uniform(rng, opts.l_diag_lo, opts.l_diag_hi);
  hp.noise_var = log_uniform(rng, opts.noise_lo, opts.noise_hi);
  return hp;
}

CheckReport gradient_check(int samples, std::uint64_t seed, double tolerance) {
  CheckReport report;
  report.samples = samples;
  if (samples == 0) {
    report.detail = "warning: sample count 0, vacuous pass";
    return report;
  }

  const UraGeometry rx_geom{4, 4};
  const UraGeometry tx_geom{4, 4};
  const ActiveSet omega = equispaced_subset(tx_geom.total(), 4);

  ReparamSpec spec;
  spec.learn_noise = true;  // exercises the noise coordinate too

  RngStream root(seed);
  double worst = 0.0;
  std::string worst_where;
  for (int s = 0; s < samples; ++s) {
    RngStream rng = root.split(static_cast<std::uint64_t>(s));
    const HyperParams hp = draw_hyperparams(rng);

    ObservationSet obs;
    obs.grid = training_grid(rx_geom.total(), omega);
    const Eigen::Index p = static_cast<Eigen::Index>(obs.grid.size());
    obs.z_icm = 1.5 * rng.normal_vector(2 * p);
    obs.z.resize(p);
    for (Eigen::Index k = 0; k < p; ++k) obs.z[k] = {obs.z_icm[k], obs.z_icm[p + k]};
    obs.sigma_r_sq = hp.noise_var;
    obs.sigma_obs_sq = 2.0 * hp.noise_var;

    const Eigen::VectorXd raw = reparam_inverse(hp, spec);
    const Eigen::VectorXd grad = lml_gradient(hp, obs, rx_geom, tx_geom);

    for (int i = 0; i < raw.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(raw[i]));
      Eigen::VectorXd up = raw, dn = raw;
      up[i] += h;
      dn[i] -= h;
      const double f_up =
          log_marginal_likelihood(reparam_forward(up, spec), obs, rx_geom, tx_geom);
      const double f_dn =
          log_marginal_likelihood(reparam_forward(dn, spec), obs, rx_geom, tx_geom);
      const double fd = (f_up - f_dn) / (2.0 * h);
      const double err =
          std::abs(grad[i] - fd) / std::max({std::abs(grad[i]), std::abs(fd), 1.0});
      if (err > worst) {
        worst = err;
        worst_where = "sample " + std::to_string(s) + " coordinate " +
                      raw_param_name(i, spec.q_rx, spec.q_tx);
      }
    }
  }
  report.worst = worst;
  report.passed = worst < tolerance;
  std::ostringstream detail;
  detail << "worst relative gradient error " << worst << " (" << worst_where << "), tolerance "
         << tolerance;
  report.detail = detail.str();
  return report;
}

CheckReport psd_check(int samples, std::uint64_t seed, double eig_tol_factor, double shift_tol) {
  CheckReport report;
  report.samples = samples;
  if (samples == 0) {
    report.detail = "warning: sample count 0, vacuous pass";
    return report;
  }

  RngStream root(seed);
  double worst_eig_ratio = 0.0;  // most negative min_eig / trace seen
  double worst_shift = 0.0;
  for (int s = 0; s < samples; ++s) {
    RngStream rng = root.split(static_cast<std::uint64_t>(s));
    const HyperParams hp = draw_hyperparams(rng);

    // Random geometry with P = n_rx * n_active <= 64.
    const UraGeometry rx_geom{1 + static_cast<int>(rng.uniform_index(4)),
                              1 + static_cast<int>(rng.uniform_index(4))};
    const UraGeometry tx_geom{1 + static_cast<int>(rng.uniform_index(4)),
                              1 + static_cast<int>(rng.uniform_index(4))};
    const int max_active = std::max(1, 64 / rx_geom.total());
    const int budget =
        1 + static_cast<int>(rng.uniform_index(
                static_cast<std::uint64_t>(std::min(max_active, tx_geom.total()))));
    const ActiveSet omega = equispaced_subset(tx_geom.total(), budget);
    const std::vector<IndexPair> grid = training_grid(rx_geom.total(), omega);

    const Eigen::MatrixXd base = assemble_gram(hp, grid, grid, rx_geom, tx_geom);
    const Eigen::MatrixXd lifted = lift_icm(base, icm_coupling(hp.icm));
    const double base_ratio = -min_eigenvalue(base) / std::max(base.trace(), 1e-300);
    const double lifted_ratio = -min_eigenvalue(lifted) / std::max(lifted.trace(), 1e-300);
    worst_eig_ratio = std::max({worst_eig_ratio, base_ratio, lifted_ratio});

    // Shift invariance: common lattice offsets applied to both arguments.
    for (int t = 0; t < 8; ++t) {
      auto draw_shifted_pair = [&](const UraGeometry& g, int& i1, int& i2, int& j1, int& j2) {
        const int y1 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(g.ny)));
        const int z1 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(g.nz)));
        const int y2 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(g.ny)));
        const int z2 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(g.nz)));
        const int sy_max = g.ny - 1 - std::max(y1, y2);
        const int sz_max = g.nz - 1 - std::max(z1, z2);
        const int sy = sy_max > 0 ? static_cast<int>(rng.uniform_index(sy_max + 1)) : 0;
        const int sz = sz_max > 0 ? static_cast<int>(rng.uniform_index(sz_max + 1)) : 0;
        i1 = 1 + y1 + g.ny * z1;
        i2 = 1 + y2 + g.ny * z2;
        j1 = 1 + (y1 + sy) + g.ny * (z1 + sz);
        j2 = 1 + (y2 + sy) + g.ny * (z2 + sz);
      };
      int r1, r2, r1s, r2s, t1, t2, t1s, t2s;
      draw_shifted_pair(rx_geom, r1, r2, r1s, r2s);
      draw_shifted_pair(tx_geom, t1, t2, t1s, t2s);
      const double v1 = base_eval(hp, {r1, t1}, {r2, t2}, rx_geom, tx_geom);
      const double v2 = base_eval(hp, {r1s, t1s}, {r2s, t2s}, rx_geom, tx_geom);
      worst_shift = std::max(worst_shift, std::abs(v1 - v2) / std::max(1.0, std::abs(v1)));
    }
  }

  report.worst = std::max(worst_eig_ratio / eig_tol_factor, worst_shift / shift_tol);
  report.passed = worst_eig_ratio <= eig_tol_factor && worst_shift <= shift_tol;
  std::ostringstream detail;
  detail << "worst -min_eig/trace " << worst_eig_ratio << " (tolerance " << eig_tol_factor
         << "), worst shift deviation " << worst_shift << " (tolerance " << shift_tol << ")";
  report.detail = detail.str();
  return report;
}

}  // namespace gpchan
