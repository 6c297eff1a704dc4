#include <doctest.h>

#include <cmath>

#include "gpchan/config.hpp"
#include "gpchan/eval.hpp"
#include "gpchan/io.hpp"

using namespace gpchan;

TEST_CASE("nmse: anchors and error-only scaling") {
  RngStream rng(81);
  ChannelMatrix h(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) h(i, j) = rng.complex_normal();

  CHECK(nmse(h, h) == 0.0);
  CHECK(nmse(ChannelMatrix::Zero(3, 3), h) == doctest::Approx(1.0));
  CHECK(nmse(2.0 * h, h) == doctest::Approx(1.0));

  ChannelMatrix err(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) err(i, j) = rng.complex_normal();
  const double base = nmse(h + err, h);
  CHECK(nmse(h + 3.0 * err, h) == doctest::Approx(9.0 * base).epsilon(1e-12));
  CHECK_THROWS_AS((void)nmse(h, ChannelMatrix::Zero(3, 3)), std::invalid_argument);
}

TEST_CASE("lmmse_detector: limits and the diagonal closed form") {
  const ChannelMatrix eye = ChannelMatrix::Identity(3, 3);
  CHECK((lmmse_detector(eye, 1e12) - eye).norm() < 1e-9);
  CHECK(lmmse_detector(eye, 1e-12).norm() < 1e-9);

  ChannelMatrix diag = ChannelMatrix::Zero(2, 2);
  diag(0, 0) = 1.0;
  diag(1, 1) = 2.0;
  const Eigen::MatrixXcd w = lmmse_detector(diag, 2.0);  // regularizer n_tx/rho = 1
  CHECK(std::abs(w(0, 0) - std::complex<double>(0.5, 0.0)) < 1e-12);
  CHECK(std::abs(w(1, 1) - std::complex<double>(0.4, 0.0)) < 1e-12);
  CHECK(std::abs(w(0, 1)) < 1e-12);
}

TEST_CASE("spectral_efficiency: scalar anchor, overhead pre-log, genie dominance") {
  const ChannelMatrix one = ChannelMatrix::Identity(1, 1);
  CHECK(spectral_efficiency(one, one, 1.0, 0, 100) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spectral_efficiency(one, one, 1.0, 100, 100) == 0.0);

  RngStream rng(82);
  for (int t = 0; t < 100; ++t) {
    ChannelMatrix h(3, 3), h_hat(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        h(i, j) = rng.complex_normal();
        h_hat(i, j) = h(i, j) + 0.5 * rng.complex_normal();
      }
    const double rho = 2.0;
    const double genie = spectral_efficiency(h, h, rho, 0, 100);
    const double with_est = spectral_efficiency(h_hat, h, rho, 0, 100);
    CHECK(with_est <= genie + 1e-9);
    CHECK(with_est >= 0.0);
  }
}

TEST_CASE("energy_ratio: exact fractions") {
  CHECK(energy_ratio(16, 16) == 1.0);
  CHECK(energy_ratio(8, 16) == 0.5);
  CHECK(energy_ratio(4, 16) == 0.25);
  CHECK(energy_ratio(2, 16) == 0.125);
  CHECK_THROWS_AS((void)energy_ratio(0, 16), std::invalid_argument);
  CHECK_THROWS_AS((void)energy_ratio(17, 16), std::invalid_argument);
}

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg = default_experiment_config();
  cfg.rx_geom = {2, 2};
  cfg.tx_geom = {2, 2};
  cfg.snr_db_list = {0.0};
  cfg.nt_list = {4};
  cfg.trials = 1;
  cfg.estimators = {"ls"};
  cfg.learn.restarts = 1;
  cfg.learn.max_iters = 15;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST_CASE("run_monte_carlo: a single estimator row for the minimal config") {
  const SweepResult result = run_monte_carlo(tiny_config());
  REQUIRE(result.rows.size() == 1);
  CHECK(result.rows[0].estimator == "ls");
  CHECK(result.rows[0].n_t == 4);
  CHECK(result.rows[0].energy_ratio == 1.0);
  CHECK(result.rows[0].status == "ok");
  CHECK(!result.rows[0].lml.has_value());
}

TEST_CASE("run_monte_carlo: trial count scales the row count") {
  ExperimentConfig cfg = tiny_config();
  cfg.trials = 3;
  const SweepResult result = run_monte_carlo(cfg);
  CHECK(result.rows.size() == 3);
}

TEST_CASE("run_monte_carlo: deterministic across runs and thread counts") {
  ExperimentConfig cfg = tiny_config();
  cfg.estimators = {"gpr", "ls", "mmse", "omp", "amp", "genie"};
  cfg.trials = 2;
  cfg.nt_list = {4, 2};
  cfg.snr_db_list = {0.0, 10.0};
  cfg.learn.restarts = 1;
  cfg.learn.max_iters = 10;

  const SweepResult a = run_monte_carlo(cfg);
  const SweepResult b = run_monte_carlo(cfg);
  CHECK(results_csv(a.rows) == results_csv(b.rows));
  CHECK(hyper_records_text(a.hyper_records) == hyper_records_text(b.hyper_records));

  ExperimentConfig parallel = cfg;
  parallel.threads = 2;
  const SweepResult c = run_monte_carlo(parallel);
  CHECK(results_csv(a.rows) == results_csv(c.rows));

  // Row identity: genie first within a trial, then budget-major estimators.
  REQUIRE(a.rows.size() == 2 * 2 * (1 + 1 + 4 + 1));  // per (snr, trial): genie + gpr(x2) + 4 full
  CHECK(a.rows[0].estimator == "genie");
  CHECK(a.rows[1].estimator == "amp");

  // The gpr rows carry an evidence value; baselines do not.
  int gpr_rows = 0;
  for (const auto& r : a.rows)
    if (r.estimator == "gpr") {
      CHECK(r.lml.has_value());
      ++gpr_rows;
    }
  CHECK(gpr_rows == 2 * 2 * 2);
}

TEST_CASE("run_monte_carlo: the channel and noise draws do not depend on later budgets") {
  ExperimentConfig one_budget = tiny_config();
  one_budget.estimators = {"ls"};
  ExperimentConfig two_budgets = one_budget;
  two_budgets.nt_list = {4, 2};
  two_budgets.estimators = {"ls", "gpr"};

  const SweepResult a = run_monte_carlo(one_budget);
  const SweepResult b = run_monte_carlo(two_budgets);
  const ResultRow* ls_b = nullptr;
  for (const auto& r : b.rows)
    if (r.estimator == "ls") ls_b = &r;
  REQUIRE(ls_b != nullptr);
  CHECK(a.rows[0].nmse == ls_b->nmse);  // bit-identical shared realization
  CHECK(a.rows[0].se_bps_hz == ls_b->se_bps_hz);

  // Nearly noiseless full-pilot least squares recovers the channel.
  ExperimentConfig quiet = one_budget;
  quiet.snr_db_list = {60.0};
  const SweepResult q = run_monte_carlo(quiet);
  CHECK(q.rows[0].nmse < 1e-5);
}

TEST_CASE("summarize: linear averaging before the dB conversion") {
  std::vector<ResultRow> rows(2);
  rows[0] = {"ls", 0.0, 4, 0, 0.1, -10.0, 1.0, 0.5, 1.0, std::nullopt, 0.0, "ok"};
  rows[1] = {"ls", 0.0, 4, 1, 0.3, -5.2, 3.0, 0.7, 1.0, std::nullopt, 0.0, "ok"};
  const auto summary = summarize(rows, 4);
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].nmse_db == doctest::Approx(10.0 * std::log10(0.2)));
  CHECK(summary[0].se_bps_hz == doctest::Approx(2.0));
  CHECK(summary[0].rel_se_pct == doctest::Approx(60.0));  // mean of per-trial ratios
  CHECK(summary[0].trials == 2);
  CHECK(summary[0].pilot_savings_pct == doctest::Approx(0.0));
}

TEST_CASE("validate: rejects bad configs") {
  ExperimentConfig cfg = tiny_config();
  cfg.nt_list = {5};
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = tiny_config();
  cfg.estimators = {"unknown"};
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = tiny_config();
  cfg.coherence_block = 4;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = tiny_config();
  cfg.trials = 0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}
