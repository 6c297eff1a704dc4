#include "gpchan/learn.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "gpchan/linalg.hpp"
#include "gpchan/rng.hpp"

namespace gpchan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

struct EvalResult {
  double lml = -kInf;
  double jitter_used = 0.0;
  bool escalated() const { return jitter_used > 1.5 * kGpBaseJitter; }
};

EvalResult lml_with_factor(const HyperParams& hp, const ObservationSet& obs,
                           const UraGeometry& rx_geom, const UraGeometry& tx_geom,
                           SpdFactor* factor_out, GramBundle* bundle_out) {
  const GramBundle bundle = build_gram_bundle(hp, obs.grid, rx_geom, tx_geom);
  SpdFactor chol = spd_factorize_gp(bundle.c_theta);
  const Eigen::VectorXd alpha = chol.solve(obs.z_icm);
  const double quad = obs.z_icm.dot(alpha);
  const double p = 0.5 * static_cast<double>(obs.z_icm.size());
  EvalResult r;
  r.lml = -0.5 * quad - 0.5 * chol.log_det() - p * std::log(2.0 * M_PI);
  r.jitter_used = chol.jitter_used();
  if (bundle_out) *bundle_out = bundle;
  if (factor_out) *factor_out = std::move(chol);
  return r;
}

}  // namespace

HyperParams reparam_forward(const Eigen::VectorXd& raw, const ReparamSpec& spec) {
  if (raw.size() != spec.size())
    throw std::invalid_argument("reparam_forward: raw vector has wrong length");
  const HyperBounds& b = spec.bounds;
  HyperParams hp;
  hp.amplitude = clamp(std::exp(raw[0]), b.amp_min, b.amp_max);
  auto read_side = [&](int offset, int n) {
    std::vector<SmComponent> comps(n);
    for (int q = 0; q < n; ++q) {
      const int k = offset + 5 * q;
      comps[q].weight = clamp(std::exp(raw[k]), b.weight_min, b.weight_max);
      comps[q].freq_y = clamp(0.5 * std::tanh(raw[k + 1]), -b.freq_abs_max, b.freq_abs_max);
      comps[q].freq_z = clamp(0.5 * std::tanh(raw[k + 2]), -b.freq_abs_max, b.freq_abs_max);
      comps[q].var_y = clamp(std::exp(raw[k + 3]), b.var_min, b.var_max);
      comps[q].var_z = clamp(std::exp(raw[k + 4]), b.var_min, b.var_max);
    }
    return comps;
  };
  hp.rx = read_side(1, spec.q_rx);
  hp.tx = read_side(1 + 5 * spec.q_rx, spec.q_tx);
  const int i0 = 1 + 5 * (spec.q_rx + spec.q_tx);
  hp.icm.l00 = clamp(std::exp(raw[i0]), b.l_diag_min, b.l_diag_max);
  hp.icm.l10 = raw[i0 + 1];
  hp.icm.l11 = clamp(std::exp(raw[i0 + 2]), b.l_diag_min, b.l_diag_max);
  hp.noise_var = spec.learn_noise ? clamp(std::exp(raw[i0 + 3]), b.noise_min, b.noise_max)
                                  : spec.fixed_noise_var;
  return hp;
}

Eigen::VectorXd reparam_inverse(const HyperParams& hp, const ReparamSpec& spec) {
  if (static_cast<int>(hp.rx.size()) != spec.q_rx || static_cast<int>(hp.tx.size()) != spec.q_tx)
    throw std::invalid_argument("reparam_inverse: component counts do not match spec");
  Eigen::VectorXd raw(spec.size());
  raw[0] = std::log(hp.amplitude);
  auto write_side = [&](int offset, const std::vector<SmComponent>& comps) {
    for (size_t q = 0; q < comps.size(); ++q) {
      const int k = offset + 5 * static_cast<int>(q);
      raw[k] = std::log(comps[q].weight);
      raw[k + 1] = std::atanh(clamp(2.0 * comps[q].freq_y, -1.0 + 1e-12, 1.0 - 1e-12));
      raw[k + 2] = std::atanh(clamp(2.0 * comps[q].freq_z, -1.0 + 1e-12, 1.0 - 1e-12));
      raw[k + 3] = std::log(comps[q].var_y);
      raw[k + 4] = std::log(comps[q].var_z);
    }
  };
  write_side(1, hp.rx);
  write_side(1 + 5 * spec.q_rx, hp.tx);
  const int i0 = 1 + 5 * (spec.q_rx + spec.q_tx);
  raw[i0] = std::log(hp.icm.l00);
  raw[i0 + 1] = hp.icm.l10;
  raw[i0 + 2] = std::log(hp.icm.l11);
  raw[i0 + 3] = spec.learn_noise && hp.noise_var > 0.0 ? std::log(hp.noise_var) : 0.0;
  return raw;
}

double log_marginal_likelihood(const HyperParams& hp, const ObservationSet& obs,
                               const UraGeometry& rx_geom, const UraGeometry& tx_geom) {
  return lml_with_factor(hp, obs, rx_geom, tx_geom, nullptr, nullptr).lml;
}

Eigen::VectorXd lml_gradient(const HyperParams& hp, const ObservationSet& obs,
                             const UraGeometry& rx_geom, const UraGeometry& tx_geom) {
  GramBundle bundle;
  SpdFactor chol(Eigen::MatrixXd::Identity(1, 1), 0.0);
  lml_with_factor(hp, obs, rx_geom, tx_geom, &chol, &bundle);

  const Eigen::Index p = bundle.base.rows();
  const Eigen::VectorXd alpha = chol.solve(obs.z_icm);
  const Eigen::MatrixXd cinv = chol.inverse();

  const auto a1 = alpha.head(p);
  const auto a2 = alpha.tail(p);
  const auto g11 = cinv.topLeftCorner(p, p);
  const auto g12 = cinv.topRightCorner(p, p);
  const auto g22 = cinv.bottomRightCorner(p, p);

  const GramDerivatives derivs(hp, obs.grid, rx_geom, tx_geom);
  const Eigen::Matrix2d b = derivs.coupling();

  // For a base-kernel coordinate dC = lift(D, B), so
  // tr[(aa^T - C^-1) dC] collapses to an inner product of D with a fixed
  // P x P weight matrix.
  Eigen::MatrixXd w = b(0, 0) * (a1 * a1.transpose() - g11);
  w.noalias() += b(1, 1) * (a2 * a2.transpose() - g22);
  w.noalias() += b(0, 1) * (a1 * a2.transpose() + a2 * a1.transpose() - g12 - g12.transpose());

  const Eigen::MatrixXd& kb = bundle.base;
  const double q11 = a1.dot(kb * a1) - g11.cwiseProduct(kb).sum();
  const double q12 = a1.dot(kb * a2) - g12.cwiseProduct(kb).sum();
  const double q22 = a2.dot(kb * a2) - g22.cwiseProduct(kb).sum();

  Eigen::VectorXd grad(derivs.count());
  Eigen::MatrixXd d;
  for (int i = 0; i < derivs.count(); ++i) {
    switch (derivs.kind(i)) {
      case GramDerivatives::Kind::kBase:
        derivs.base_derivative(i, d);
        grad[i] = 0.5 * w.cwiseProduct(d).sum();
        break;
      case GramDerivatives::Kind::kIcm: {
        const Eigen::Matrix2d db = derivs.icm_derivative(i);
        grad[i] = 0.5 * (db(0, 0) * q11 + 2.0 * db(0, 1) * q12 + db(1, 1) * q22);
        break;
      }
      case GramDerivatives::Kind::kNoise:
        grad[i] = 0.5 * hp.noise_var * (alpha.squaredNorm() - cinv.trace());
        break;
    }
  }
  return grad;
}

namespace {

struct RawBox {
  Eigen::VectorXd lo, hi;
};

RawBox raw_box(const ReparamSpec& spec) {
  const HyperBounds& b = spec.bounds;
  const int n = spec.size();
  RawBox box{Eigen::VectorXd::Constant(n, -kInf), Eigen::VectorXd::Constant(n, kInf)};
  box.lo[0] = std::log(b.amp_min);
  box.hi[0] = std::log(b.amp_max);
  auto side = [&](int offset, int count) {
    for (int q = 0; q < count; ++q) {
      const int k = offset + 5 * q;
      box.lo[k] = std::log(b.weight_min);
      box.hi[k] = std::log(b.weight_max);
      // tanh saturates; a finite raw cap keeps the search from drifting
      // along the flat direction while covering the native range to 1e-5.
      box.lo[k + 1] = -6.0;
      box.hi[k + 1] = 6.0;
      box.lo[k + 2] = -6.0;
      box.hi[k + 2] = 6.0;
      box.lo[k + 3] = std::log(b.var_min);
      box.hi[k + 3] = std::log(b.var_max);
      box.lo[k + 4] = std::log(b.var_min);
      box.hi[k + 4] = std::log(b.var_max);
    }
  };
  side(1, spec.q_rx);
  side(1 + 5 * spec.q_rx, spec.q_tx);
  const int i0 = 1 + 5 * (spec.q_rx + spec.q_tx);
  box.lo[i0] = std::log(b.l_diag_min);
  box.hi[i0] = std::log(b.l_diag_max);
  box.lo[i0 + 1] = -100.0;
  box.hi[i0 + 1] = 100.0;
  box.lo[i0 + 2] = std::log(b.l_diag_min);
  box.hi[i0 + 2] = std::log(b.l_diag_max);
  if (spec.learn_noise) {
    box.lo[i0 + 3] = std::log(b.noise_min);
    box.hi[i0 + 3] = std::log(b.noise_max);
  } else {
    box.lo[i0 + 3] = 0.0;  // frozen
    box.hi[i0 + 3] = 0.0;
  }
  return box;
}

Eigen::VectorXd project(const Eigen::VectorXd& x, const RawBox& box) {
  return x.cwiseMax(box.lo).cwiseMin(box.hi);
}

// Zeroes components that sit at a bound and point outward.
Eigen::VectorXd projected_ascent_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                          const RawBox& box) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (box.lo[i] == box.hi[i]) pg[i] = 0.0;
    else if (x[i] <= box.lo[i] && g[i] < 0.0) pg[i] = 0.0;
    else if (x[i] >= box.hi[i] && g[i] > 0.0) pg[i] = 0.0;
  }
  return pg;
}

struct RestartOutcome {
  bool usable = false;
  bool converged = false;
  int iterations = 0;
  double lml = -kInf;
  Eigen::VectorXd raw;
  double grad_norm = kInf;
};

}  // namespace

Eigen::VectorXd variance_matched_init(const ObservationSet& obs, const ReparamSpec& spec) {
  HyperParams hp;
  hp.rx.resize(spec.q_rx);
  hp.tx.resize(spec.q_tx);
  const double v_mid = std::sqrt(spec.bounds.var_min * spec.bounds.var_max);
  auto fill_side = [&](std::vector<SmComponent>& comps) {
    const int n = static_cast<int>(comps.size());
    for (int q = 0; q < n; ++q) {
      comps[q].weight = std::max(1.0 / n, spec.bounds.weight_min);
      // Distinct small frequencies; an all-zero start is a stationary point
      // of the frequency coordinates by symmetry.
      comps[q].freq_y = n > 1 ? -0.15 + 0.30 * q / (n - 1) : 0.05;
      comps[q].freq_z = n > 1 ? -0.10 + 0.25 * q / (n - 1) : -0.05;
      comps[q].var_y = v_mid;
      comps[q].var_z = v_mid;
    }
  };
  fill_side(hp.rx);
  fill_side(hp.tx);
  hp.icm = IcmParams{1.0, 0.0, 1.0};

  const double sample_var =
      obs.z_icm.size() > 0 ? obs.z_icm.squaredNorm() / static_cast<double>(obs.z_icm.size()) : 1.0;
  const double noise = spec.learn_noise ? obs.sigma_r_sq : spec.fixed_noise_var;
  // Marginal per-task variance is amplitude * sum(w_rx) * sum(w_tx) * tr(B)/2
  // plus noise; solve for the amplitude.
  double wsum_r = 0.0, wsum_t = 0.0;
  for (const auto& c : hp.rx) wsum_r += c.weight;
  for (const auto& c : hp.tx) wsum_t += c.weight;
  const double denom = wsum_r * wsum_t;  // tr(B)/2 = 1 at identity coupling
  double amp = (sample_var - noise) / denom;
  if (!(amp > spec.bounds.amp_min)) amp = spec.bounds.amp_min * 10.0;
  hp.amplitude = clamp(amp, spec.bounds.amp_min, spec.bounds.amp_max);
  hp.noise_var = spec.learn_noise ? clamp(obs.sigma_r_sq, spec.bounds.noise_min,
                                          spec.bounds.noise_max)
                                  : spec.fixed_noise_var;
  return reparam_inverse(hp, spec);
}

namespace {

Eigen::VectorXd random_init(RngStream& rng, const ReparamSpec& spec, const RawBox& box) {
  Eigen::VectorXd raw(spec.size());
  for (int i = 0; i < spec.size(); ++i) {
    double lo = box.lo[i], hi = box.hi[i];
    if (lo == hi) {
      raw[i] = lo;
      continue;
    }
    // Finite sub-ranges for the nominally unbounded coordinates.
    if (!std::isfinite(lo) || hi - lo > 20.0) {
      lo = std::max(lo, -2.0);
      hi = std::min(hi, 2.0);
    }
    raw[i] = rng.uniform(lo, hi);
  }
  return raw;
}

class LbfgsMemory {
 public:
  explicit LbfgsMemory(int capacity) : capacity_(capacity) {}

  void push(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    const double sy = s.dot(y);
    if (sy <= 1e-12 * s.norm() * y.norm()) return;  // curvature guard
    if (static_cast<int>(pairs_.size()) == capacity_) pairs_.pop_front();
    pairs_.push_back({s, y, 1.0 / sy});
  }

  // Two-loop recursion: approximates H * g for the minimization objective.
  Eigen::VectorXd apply(const Eigen::VectorXd& g) const {
    Eigen::VectorXd q = g;
    std::vector<double> a(pairs_.size());
    for (int i = static_cast<int>(pairs_.size()) - 1; i >= 0; --i) {
      a[i] = pairs_[i].rho * pairs_[i].s.dot(q);
      q -= a[i] * pairs_[i].y;
    }
    if (!pairs_.empty()) {
      const auto& last = pairs_.back();
      q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (size_t i = 0; i < pairs_.size(); ++i) {
      const double beta = pairs_[i].rho * pairs_[i].y.dot(q);
      q += (a[i] - beta) * pairs_[i].s;
    }
    return q;
  }

  void clear() { pairs_.clear(); }

 private:
  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  int capacity_;
  std::deque<Pair> pairs_;
};

}  // namespace

OptimizerReport optimize(const ObservationSet& obs, const UraGeometry& rx_geom,
                         const UraGeometry& tx_geom, const LearnConfig& cfg) {
  if (obs.grid.empty()) throw std::invalid_argument("optimize: empty observation set");
  if (cfg.restarts < 1) throw std::invalid_argument("optimize: need at least one restart");

  ReparamSpec spec;
  spec.q_rx = cfg.q_rx;
  spec.q_tx = cfg.q_tx;
  spec.bounds = cfg.bounds;
  spec.learn_noise = cfg.learn_noise;
  spec.fixed_noise_var = obs.sigma_r_sq;
  const RawBox box = raw_box(spec);

  OptimizerReport report;
  RngStream rng(cfg.seed);

  auto note_escalation = [&](int restart, int iter, const EvalResult& r) {
    if (r.escalated()) {
      std::ostringstream msg;
      msg << "restart " << restart << " iter " << iter << ": jitter " << r.jitter_used;
      report.escalations.push_back(msg.str());
    }
  };

  auto eval_value = [&](const Eigen::VectorXd& raw) {
    return lml_with_factor(reparam_forward(raw, spec), obs, rx_geom, tx_geom, nullptr, nullptr);
  };

  std::vector<RestartOutcome> outcomes;
  for (int restart = 0; restart < cfg.restarts; ++restart) {
    Eigen::VectorXd x = restart == 0 ? project(variance_matched_init(obs, spec), box)
                                     : project(random_init(rng, spec, box), box);
    RestartOutcome out;
    out.raw = x;

    double f;
    Eigen::VectorXd g;
    try {
      const EvalResult r0 = eval_value(x);
      f = r0.lml;
      g = lml_gradient(reparam_forward(x, spec), obs, rx_geom, tx_geom);
      note_escalation(restart, -1, r0);
    } catch (const NotPositiveDefiniteError&) {
      outcomes.push_back(out);  // unusable restart
      report.iterations.push_back(0);
      report.converged.push_back(0);
      ++report.restarts_run;
      continue;
    }
    out.usable = true;
    out.lml = f;
    out.raw = x;

    LbfgsMemory memory(cfg.lbfgs_memory);
    int iter = 0;
    for (; iter < cfg.max_iters; ++iter) {
      Eigen::VectorXd pg = projected_ascent_gradient(x, g, box);
      out.grad_norm = pg.lpNorm<Eigen::Infinity>();
      if (out.grad_norm < cfg.grad_tol) {
        out.converged = true;
        break;
      }

      // Minimize -LML: descent direction from the memory, with active
      // coordinates pinned.
      Eigen::VectorXd d = memory.apply(-pg);
      d = -d;  // ascent direction on LML
      for (Eigen::Index i = 0; i < d.size(); ++i)
        if (pg[i] == 0.0) d[i] = 0.0;
      if (d.dot(pg) <= 0.0) {
        memory.clear();
        d = pg;
      }

      // Backtracking on the projected path.
      const double c1 = 1e-4;
      double step = 1.0;
      bool accepted = false;
      Eigen::VectorXd x_new;
      double f_new = -kInf;
      for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
        x_new = project(x + step * d, box);
        const Eigen::VectorXd dx = x_new - x;
        if (dx.lpNorm<Eigen::Infinity>() == 0.0) break;
        EvalResult candidate;
        try {
          candidate = eval_value(x_new);
        } catch (const NotPositiveDefiniteError&) {
          continue;
        }
        if (std::isfinite(candidate.lml) && candidate.lml >= f + c1 * pg.dot(dx)) {
          f_new = candidate.lml;
          note_escalation(restart, iter, candidate);
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        out.converged = true;  // no admissible uphill step left
        break;
      }

      Eigen::VectorXd g_new = lml_gradient(reparam_forward(x_new, spec), obs, rx_geom, tx_geom);
      memory.push(x_new - x, -(g_new - g));  // minimization convention

      const double df = f_new - f;
      x = x_new;
      f = f_new;
      g = std::move(g_new);
      out.lml = f;
      out.raw = x;
      if (df < cfg.rel_tol * (1.0 + std::abs(f))) {
        out.converged = true;
        ++iter;
        break;
      }
    }
    out.iterations = iter;
    out.grad_norm = projected_ascent_gradient(x, g, box).lpNorm<Eigen::Infinity>();

    outcomes.push_back(out);
    report.iterations.push_back(out.iterations);
    report.converged.push_back(out.converged ? 1 : 0);
    ++report.restarts_run;
  }

  // Best restart by LML, then by smaller raw norm.
  int best = -1;
  for (size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].usable) continue;
    if (best < 0 || outcomes[i].lml > outcomes[best].lml + 1e-12 ||
        (std::abs(outcomes[i].lml - outcomes[best].lml) <= 1e-12 &&
         outcomes[i].raw.norm() < outcomes[best].raw.norm()))
      best = static_cast<int>(i);
  }
  if (best < 0)
    throw UnlearnableError("optimize: every restart failed to factorize the covariance");

  report.best_raw = outcomes[best].raw;
  report.best_theta = reparam_forward(report.best_raw, spec);
  report.best_lml = outcomes[best].lml;
  report.gradient_norm_final = outcomes[best].grad_norm;
  return report;
}

}  // namespace gpchan
