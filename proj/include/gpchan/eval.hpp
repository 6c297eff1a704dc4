#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpchan/baselines.hpp"
#include "gpchan/channel.hpp"
#include "gpchan/learn.hpp"

namespace gpchan {

struct ExperimentConfig {
  UraGeometry rx_geom{4, 4};
  UraGeometry tx_geom{4, 4};
  std::vector<double> snr_db_list{-15, -10, -5, 0, 5, 10};
  std::vector<int> nt_list{16, 8, 4, 2};
  int trials = 100;
  int coherence_block = 100;
  double p_active = 1.0;
  std::vector<std::string> estimators{"gpr", "ls", "mmse", "omp", "amp", "genie"};
  SvParams sv;
  LearnConfig learn;
  SparseRecoveryConfig sparse;
  std::uint64_t master_seed = 1;
  int threads = 0;  // 0 = hardware concurrency
};

void validate(const ExperimentConfig& cfg);

struct ResultRow {
  std::string estimator;
  double snr_db = 0.0;
  int n_t = 0;  // 0 for the genie reference
  int trial = 0;
  double nmse = 0.0;
  double nmse_db = 0.0;
  double se_bps_hz = 0.0;
  double rel_se = 0.0;  // fraction of the genie spectral efficiency
  double energy_ratio = 0.0;
  std::optional<double> lml;
  double wall_ms = 0.0;  // not part of the deterministic outputs
  std::string status = "ok";  // ok | fallback | failed | diverged
};

struct HyperRecord {
  double snr_db = 0.0;
  int n_t = 0;
  int trial = 0;
  std::string text;  // serialized hyperparameters
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<HyperRecord> hyper_records;
};

/// Error energy of the estimate normalized by the true channel energy.
double nmse(const ChannelMatrix& h_hat, const ChannelMatrix& h_true);

/// Regularized linear detector W = (H H^H + (n_tx/rho) I)^-1 H built from
/// the channel estimate.
Eigen::MatrixXcd lmmse_detector(const ChannelMatrix& h_hat, double rho);

/// Sum rate under the detector built from the estimate, evaluated against
/// the true channel, with the (1 - n_pilots/t_coherence) overhead pre-log.
double spectral_efficiency(const ChannelMatrix& h_hat, const ChannelMatrix& h_true, double rho,
                           int n_pilots, int t_coherence);

/// Training energy relative to full activation: n_active / n_total.
double energy_ratio(int n_active, int n_total);

/// SNR sweep x trials x pilot budgets. One channel per (snr, trial) shared
/// across budgets; baselines run at full activation only; a genie reference
/// row is emitted per (snr, trial). Rows are ordered by
/// (snr index, trial, budget index, estimator) and are identical for any
/// thread count.
SweepResult run_monte_carlo(const ExperimentConfig& cfg);

struct SummaryRow {
  std::string estimator;
  double snr_db = 0.0;
  int n_t = 0;
  double nmse_db = 0.0;  // dB of the trial-averaged linear value
  double se_bps_hz = 0.0;
  double rel_se_pct = 0.0;
  double pilot_savings_pct = 0.0;
  double energy_savings_pct = 0.0;
  int trials = 0;
};

/// Per (estimator, snr, budget) aggregation: linear values are averaged over
/// trials before any dB conversion.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows, int n_tx_total);

}  // namespace gpchan
