#pragma once

#include <stdexcept>
#include <string>

#include "gpchan/eval.hpp"

namespace gpchan {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ships the default experiment: 16x16 link (4x4 arrays), the standard SNR
/// grid and pilot budgets, and the default channel and learner settings.
ExperimentConfig default_experiment_config();

/// Parses a JSON experiment description. A run manifest (an object with a
/// "config" key) is accepted as well, so any results file can be reproduced
/// from its manifest alone. Unknown fields raise ConfigError with the field
/// path.
ExperimentConfig parse_experiment_config(const std::string& json_text);

/// Applies a dotted-path override such as "learn.restarts=8" or
/// "snr_db=[-5,0,5]". The value is parsed as JSON when possible, else as a
/// string.
void apply_override(ExperimentConfig& cfg, const std::string& key_eq_value);

/// Fully resolved configuration echo.
std::string experiment_config_json(const ExperimentConfig& cfg);

/// Manifest: resolved config plus seed and tool version.
std::string manifest_json(const ExperimentConfig& cfg, const std::string& version);

}  // namespace gpchan
