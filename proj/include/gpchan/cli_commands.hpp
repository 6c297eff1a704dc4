#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gpchan {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitPropertyViolation = 4;

struct CliOptions {
  std::string config_path;  // required for sweep and estimate
  std::string out_dir = "out";
  std::vector<std::string> overrides;  // key=value
  std::optional<std::uint64_t> seed;
  std::optional<std::string> estimators_csv;
  std::optional<int> trials;
  int samples = -1;  // gradcheck / psd-check; -1 means the command default
};

int cmd_sweep(const CliOptions& opts);
int cmd_estimate(const CliOptions& opts);
int cmd_demo_slice(const CliOptions& opts);
int cmd_gradcheck(const CliOptions& opts);
int cmd_psd_check(const CliOptions& opts);

}  // namespace gpchan
