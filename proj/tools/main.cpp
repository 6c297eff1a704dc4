// Command-line front end: sweeps, single-shot estimation, the 1-D posterior
// demo, and the gradient / positive-semidefiniteness verification suites.

#include <CLI11.hpp>

#include "gpchan/cli_commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"GP-based MIMO channel estimation toolkit"};
  app.require_subcommand(1);

  gpchan::CliOptions opts;
  std::uint64_t seed_value = 0;
  int trials_value = 0;
  std::string estimators_value;

  auto add_common = [&](CLI::App* cmd, bool with_config) {
    if (with_config) cmd->add_option("--config", opts.config_path, "JSON config or run manifest");
    cmd->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--set", opts.overrides, "config override key=value (repeatable)");
    cmd->add_option("--seed", seed_value, "master seed override")
        ->each([&](const std::string&) { opts.seed = seed_value; });
    cmd->add_option("--estimators", estimators_value, "comma-separated estimator list")
        ->each([&](const std::string&) { opts.estimators_csv = estimators_value; });
    cmd->add_option("--trials", trials_value, "trial count override")
        ->each([&](const std::string&) { opts.trials = trials_value; });
  };

  CLI::App* sweep = app.add_subcommand("sweep", "run the Monte-Carlo sweep");
  add_common(sweep, true);
  CLI::App* estimate = app.add_subcommand("estimate", "single-shot channel estimate");
  add_common(estimate, true);
  CLI::App* demo = app.add_subcommand("demo-slice", "1-D posterior slice demo data");
  add_common(demo, false);
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  add_common(gradcheck, false);
  gradcheck->add_option("--samples", opts.samples, "number of random points");
  CLI::App* psd = app.add_subcommand("psd-check", "PSD and stationarity suite");
  add_common(psd, false);
  psd->add_option("--samples", opts.samples, "number of random draws");

  CLI11_PARSE(app, argc, argv);

  if (sweep->parsed()) return gpchan::cmd_sweep(opts);
  if (estimate->parsed()) return gpchan::cmd_estimate(opts);
  if (demo->parsed()) return gpchan::cmd_demo_slice(opts);
  if (gradcheck->parsed()) return gpchan::cmd_gradcheck(opts);
  if (psd->parsed()) return gpchan::cmd_psd_check(opts);
  return gpchan::kExitConfig;
}
