#include "gpchan/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "gpchan/gpr.hpp"
#include "gpchan/linalg.hpp"

namespace gpchan {

void validate(const ExperimentConfig& cfg) {
  if (cfg.rx_geom.total() < 1 || cfg.tx_geom.total() < 1)
    throw std::invalid_argument("config: empty array geometry");
  if (cfg.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (cfg.snr_db_list.empty()) throw std::invalid_argument("config: empty snr list");
  if (cfg.nt_list.empty()) throw std::invalid_argument("config: empty pilot budget list");
  for (int nt : cfg.nt_list) {
    if (nt < 1 || nt > cfg.tx_geom.total())
      throw std::invalid_argument("config: pilot budget " + std::to_string(nt) +
                                  " outside 1.." + std::to_string(cfg.tx_geom.total()));
    if (nt >= cfg.coherence_block)
      throw std::invalid_argument("config: coherence block must exceed every pilot budget");
  }
  if (cfg.p_active <= 0.0) throw std::invalid_argument("config: p_active must be positive");
  for (const auto& name : cfg.estimators) {
    if (name != "gpr" && name != "ls" && name != "mmse" && name != "omp" && name != "amp" &&
        name != "genie")
      throw std::invalid_argument("config: unknown estimator '" + name + "'");
  }
}

double nmse(const ChannelMatrix& h_hat, const ChannelMatrix& h_true) {
  if (h_hat.rows() != h_true.rows() || h_hat.cols() != h_true.cols())
    throw std::invalid_argument("nmse: shape mismatch");
  const double denom = h_true.squaredNorm();
  if (denom <= 0.0) throw std::invalid_argument("nmse: zero true channel");
  return (h_hat - h_true).squaredNorm() / denom;
}

Eigen::MatrixXcd lmmse_detector(const ChannelMatrix& h_hat, double rho) {
  if (rho <= 0.0) throw std::invalid_argument("lmmse_detector: rho must be positive");
  Eigen::MatrixXcd gram = h_hat * h_hat.adjoint();
  gram.diagonal().array() += static_cast<double>(h_hat.cols()) / rho;
  return gram.ldlt().solve(h_hat);
}

double spectral_efficiency(const ChannelMatrix& h_hat, const ChannelMatrix& h_true, double rho,
                           int n_pilots, int t_coherence) {
  if (h_hat.rows() != h_true.rows() || h_hat.cols() != h_true.cols())
    throw std::invalid_argument("spectral_efficiency: shape mismatch");
  if (t_coherence <= 0) throw std::invalid_argument("spectral_efficiency: bad coherence block");
  const Eigen::Index n_tx = h_true.cols();
  const double reg = static_cast<double>(n_tx) / rho;
  const Eigen::MatrixXcd w = lmmse_detector(h_hat, rho);

  double sum_rate = 0.0;
  for (Eigen::Index k = 0; k < n_tx; ++k) {
    const Eigen::VectorXcd wk = w.col(k);
    const double signal = std::norm(wk.dot(h_true.col(k)));
    double interference = 0.0;
    for (Eigen::Index j = 0; j < n_tx; ++j) {
      if (j == k) continue;
      interference += std::norm(wk.dot(h_true.col(j)));
    }
    const double denom = interference + reg * wk.squaredNorm();
    const double sinr = denom > 0.0 ? signal / denom : 0.0;
    sum_rate += std::log2(1.0 + sinr);
  }
  const double prelog = std::max(0.0, 1.0 - static_cast<double>(n_pilots) / t_coherence);
  return prelog * sum_rate;
}

double energy_ratio(int n_active, int n_total) {
  if (n_active < 1 || n_active > n_total) throw std::invalid_argument("energy_ratio: bad budget");
  return static_cast<double>(n_active) / n_total;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct TaggedRow {
  int snr_idx = 0;
  int trial = 0;
  int budget_idx = -1;  // -1 sorts the genie reference first
  ResultRow row;
};

struct TrialOutput {
  std::vector<TaggedRow> rows;
  std::vector<HyperRecord> hypers;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

bool wants(const ExperimentConfig& cfg, const std::string& name) {
  return std::find(cfg.estimators.begin(), cfg.estimators.end(), name) != cfg.estimators.end();
}

TrialOutput run_trial(const ExperimentConfig& cfg, const IsoPrior& prior, int snr_idx, int trial) {
  TrialOutput out;
  const double snr_db = cfg.snr_db_list[static_cast<size_t>(snr_idx)];
  const double snr_lin = std::pow(10.0, snr_db / 10.0);
  const int n_rx = cfg.rx_geom.total(), n_tx = cfg.tx_geom.total();

  RngStream trial_stream =
      RngStream(cfg.master_seed).split(static_cast<std::uint64_t>(snr_idx)).split(
          static_cast<std::uint64_t>(trial));
  RngStream channel_stream = trial_stream.split("channel");
  const ChannelMatrix h = generate_sv(cfg.sv, cfg.rx_geom, cfg.tx_geom, channel_stream);

  // The perfect-CSI, zero-overhead reference is always computed (the
  // relative-SE column needs it) but only reported as a row on request.
  const double genie_se = spectral_efficiency(h, h, snr_lin, 0, cfg.coherence_block);
  if (wants(cfg, "genie")) {
    ResultRow genie;
    genie.estimator = "genie";
    genie.snr_db = snr_db;
    genie.n_t = 0;
    genie.trial = trial;
    genie.nmse = 0.0;
    genie.nmse_db = kNegInf;
    genie.se_bps_hz = genie_se;
    genie.rel_se = 1.0;
    genie.energy_ratio = 0.0;
    out.rows.push_back({snr_idx, trial, -1, std::move(genie)});
  }

  auto metric_row = [&](const std::string& name, int n_t, const ChannelMatrix& h_hat,
                        std::optional<double> lml, const std::string& status, double wall_ms) {
    ResultRow row;
    row.estimator = name;
    row.snr_db = snr_db;
    row.n_t = n_t;
    row.trial = trial;
    row.nmse = nmse(h_hat, h);
    row.nmse_db = row.nmse > 0.0 ? 10.0 * std::log10(row.nmse) : kNegInf;
    row.se_bps_hz = spectral_efficiency(h_hat, h, snr_lin, n_t, cfg.coherence_block);
    row.rel_se = genie_se > 0.0 ? row.se_bps_hz / genie_se : 0.0;
    row.energy_ratio = energy_ratio(n_t, n_tx);
    row.lml = lml;
    row.wall_ms = wall_ms;
    row.status = status;
    return row;
  };

  for (size_t l = 0; l < cfg.nt_list.size(); ++l) {
    const int n_t = cfg.nt_list[l];
    RngStream budget_stream = trial_stream.split("budget").split(static_cast<std::uint64_t>(l));

    const ActiveSet omega = equispaced_subset(n_tx, n_t);
    const double sigma_n_sq = snr_to_noise(snr_lin, n_t, cfg.p_active);
    const double sigma_obs_sq = sigma_n_sq / cfg.p_active;
    const Eigen::MatrixXcd pilots = design_pilots(n_t, n_t);
    RngStream noise_stream = budget_stream.split("noise");
    const Eigen::MatrixXcd received =
        transmit_and_receive(h, omega, pilots, cfg.p_active, sigma_n_sq, noise_stream);
    const Eigen::MatrixXcd z_mat = matched_filter(received, pilots, cfg.p_active);
    const ObservationSet obs = build_observations(z_mat, omega, n_rx, sigma_obs_sq);

    if (wants(cfg, "gpr")) {
      Stopwatch timer;
      std::string status = "ok";
      std::optional<double> lml;
      HyperParams hp;
      LearnConfig learn_cfg = cfg.learn;
      learn_cfg.seed = budget_stream.split("learn").key();
      try {
        const OptimizerReport report = optimize(obs, cfg.rx_geom, cfg.tx_geom, learn_cfg);
        hp = report.best_theta;
        lml = report.best_lml;
      } catch (const UnlearnableError&) {
        // Fall back to the initialization bundle for this trial.
        ReparamSpec spec;
        spec.q_rx = learn_cfg.q_rx;
        spec.q_tx = learn_cfg.q_tx;
        spec.bounds = learn_cfg.bounds;
        spec.learn_noise = learn_cfg.learn_noise;
        spec.fixed_noise_var = obs.sigma_r_sq;
        hp = reparam_forward(variance_matched_init(obs, spec), spec);
        status = "fallback";
      }
      ChannelMatrix h_hat = ChannelMatrix::Zero(n_rx, n_tx);
      try {
        const ActiveSet full_omega = equispaced_subset(n_tx, n_tx);
        const std::vector<IndexPair> grid =
            prediction_grid(n_rx, n_tx, PredictionMode::kFull, full_omega);
        const Posterior post = posterior(hp, obs, grid, cfg.rx_geom, cfg.tx_geom);
        h_hat = reconstruct(post.mean, grid, n_rx, n_tx);
      } catch (const NotPositiveDefiniteError&) {
        status = "failed";
      }
      out.rows.push_back(
          {snr_idx, trial, static_cast<int>(l),
           metric_row("gpr", n_t, h_hat, lml, status, timer.ms())});
      out.hypers.push_back({snr_db, n_t, trial, serialize_hyperparams(hp)});
    }

    if (n_t == n_tx) {
      if (wants(cfg, "ls")) {
        Stopwatch timer;
        const ChannelMatrix h_hat = ls_estimate(z_mat, omega, n_tx);
        out.rows.push_back({snr_idx, trial, static_cast<int>(l),
                            metric_row("ls", n_t, h_hat, std::nullopt, "ok", timer.ms())});
      }
      if (wants(cfg, "mmse")) {
        Stopwatch timer;
        std::string status = "ok";
        ChannelMatrix h_hat = ChannelMatrix::Zero(n_rx, n_tx);
        try {
          h_hat = mmse_isotropic(obs, prior, n_rx, n_tx);
        } catch (const std::runtime_error&) {
          status = "failed";
        }
        out.rows.push_back({snr_idx, trial, static_cast<int>(l),
                            metric_row("mmse", n_t, h_hat, std::nullopt, status, timer.ms())});
      }
      if (wants(cfg, "omp")) {
        Stopwatch timer;
        const ChannelMatrix h_hat = omp_estimate(obs, cfg.sparse, cfg.rx_geom, cfg.tx_geom);
        out.rows.push_back({snr_idx, trial, static_cast<int>(l),
                            metric_row("omp", n_t, h_hat, std::nullopt, "ok", timer.ms())});
      }
      if (wants(cfg, "amp")) {
        Stopwatch timer;
        const AmpResult amp = amp_estimate(obs, cfg.sparse, cfg.rx_geom, cfg.tx_geom);
        out.rows.push_back({snr_idx, trial, static_cast<int>(l),
                            metric_row("amp", n_t, amp.estimate, std::nullopt,
                                       amp.diverged ? "diverged" : "ok", timer.ms())});
      }
    }
  }
  return out;
}

}  // namespace

SweepResult run_monte_carlo(const ExperimentConfig& cfg) {
  validate(cfg);
  const IsoPrior prior =
      make_ura_iso_prior(cfg.rx_geom, cfg.tx_geom, 299792458.0 / cfg.sv.carrier_hz,
                         cfg.sv.spacing_over_lambda);

  const int n_items = static_cast<int>(cfg.snr_db_list.size()) * cfg.trials;
  std::vector<TrialOutput> outputs(static_cast<size_t>(n_items));

  int n_threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, n_items));

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const int item = next.fetch_add(1);
      if (item >= n_items || failed.load()) break;
      const int snr_idx = item / cfg.trials;
      const int trial = item % cfg.trials;
      try {
        outputs[static_cast<size_t>(item)] = run_trial(cfg, prior, snr_idx, trial);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failed.store(true);
        if (failure.empty()) failure = e.what();
      }
    }
  };

  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw std::runtime_error("run_monte_carlo: " + failure);

  std::vector<TaggedRow> tagged;
  SweepResult result;
  for (auto& out : outputs) {
    for (auto& r : out.rows) tagged.push_back(std::move(r));
    for (auto& hrec : out.hypers) result.hyper_records.push_back(std::move(hrec));
  }
  std::sort(tagged.begin(), tagged.end(), [](const TaggedRow& a, const TaggedRow& b) {
    if (a.snr_idx != b.snr_idx) return a.snr_idx < b.snr_idx;
    if (a.trial != b.trial) return a.trial < b.trial;
    if (a.budget_idx != b.budget_idx) return a.budget_idx < b.budget_idx;
    return a.row.estimator < b.row.estimator;
  });
  std::sort(result.hyper_records.begin(), result.hyper_records.end(),
            [](const HyperRecord& a, const HyperRecord& b) {
              if (a.snr_db != b.snr_db) return a.snr_db < b.snr_db;
              if (a.trial != b.trial) return a.trial < b.trial;
              return a.n_t > b.n_t;
            });
  result.rows.reserve(tagged.size());
  for (auto& t : tagged) result.rows.push_back(std::move(t.row));
  return result;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows, int n_tx_total) {
  struct Acc {
    double nmse_sum = 0.0;
    double se_sum = 0.0;
    int count = 0;
  };
  std::map<std::pair<double, int>, double> genie_se_sum;
  std::map<std::pair<double, int>, int> genie_count;
  for (const auto& r : rows) {
    if (r.estimator != "genie") continue;
    genie_se_sum[{r.snr_db, 0}] += r.se_bps_hz;
    genie_count[{r.snr_db, 0}] += 1;
  }

  std::map<std::tuple<std::string, double, int>, Acc> acc;
  for (const auto& r : rows) {
    Acc& a = acc[{r.estimator, r.snr_db, r.n_t}];
    a.nmse_sum += r.nmse;
    a.se_sum += r.se_bps_hz;
    a.count += 1;
  }

  std::map<std::tuple<std::string, double, int>, double> rel_se_sum;
  for (const auto& r : rows) rel_se_sum[{r.estimator, r.snr_db, r.n_t}] += r.rel_se;

  std::vector<SummaryRow> out;
  for (const auto& [key, a] : acc) {
    const auto& [name, snr, n_t] = key;
    SummaryRow s;
    s.estimator = name;
    s.snr_db = snr;
    s.n_t = n_t;
    s.trials = a.count;
    const double mean_nmse = a.nmse_sum / a.count;
    s.nmse_db = mean_nmse > 0.0 ? 10.0 * std::log10(mean_nmse) : kNegInf;
    s.se_bps_hz = a.se_sum / a.count;
    const auto git = genie_se_sum.find({snr, 0});
    // Ratio of trial means when the reference rows are present, mean of the
    // per-trial ratios otherwise.
    s.rel_se_pct = git != genie_se_sum.end() && git->second > 0.0
                       ? 100.0 * s.se_bps_hz / (git->second / genie_count[{snr, 0}])
                       : 100.0 * rel_se_sum[key] / a.count;
    const double savings =
        name == "genie" ? 100.0 : 100.0 * (1.0 - static_cast<double>(n_t) / n_tx_total);
    s.pilot_savings_pct = savings;
    s.energy_savings_pct = savings;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace gpchan
