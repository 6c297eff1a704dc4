#include "gpchan/config.hpp"

#include <json.hpp>

namespace gpchan {

using nlohmann::json;

namespace {

json geom_json(const UraGeometry& g) { return json{{"ny", g.ny}, {"nz", g.nz}}; }

json bounds_json(const HyperBounds& b) {
  return json{{"amp", {b.amp_min, b.amp_max}},
              {"weight", {b.weight_min, b.weight_max}},
              {"var", {b.var_min, b.var_max}},
              {"freq_abs_max", b.freq_abs_max},
              {"l_diag", {b.l_diag_min, b.l_diag_max}},
              {"noise", {b.noise_min, b.noise_max}}};
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["rx_geom"] = geom_json(cfg.rx_geom);
  j["tx_geom"] = geom_json(cfg.tx_geom);
  j["snr_db"] = cfg.snr_db_list;
  j["nt_list"] = cfg.nt_list;
  j["trials"] = cfg.trials;
  j["coherence_block"] = cfg.coherence_block;
  j["p_active"] = cfg.p_active;
  j["estimators"] = cfg.estimators;
  j["master_seed"] = cfg.master_seed;
  j["threads"] = cfg.threads;
  j["sv"] = json{{"n_paths", cfg.sv.n_paths},
                 {"k_factor_db", cfg.sv.k_factor_db},
                 {"cluster_arrival_mean_ns", cfg.sv.cluster_arrival_mean_ns},
                 {"ray_arrival_mean_ns", cfg.sv.ray_arrival_mean_ns},
                 {"cluster_decay_ns", cfg.sv.cluster_decay_ns},
                 {"ray_decay_ns", cfg.sv.ray_decay_ns},
                 {"angular_spread_az_deg", cfg.sv.angular_spread_az_deg},
                 {"angular_spread_el_deg", cfg.sv.angular_spread_el_deg},
                 {"carrier_hz", cfg.sv.carrier_hz},
                 {"spacing_over_lambda", cfg.sv.spacing_over_lambda},
                 {"reflection_loss_db", {cfg.sv.reflection_loss_db_lo, cfg.sv.reflection_loss_db_hi}},
                 {"path_loss_exponents", {cfg.sv.path_loss_exp_los, cfg.sv.path_loss_exp_nlos}}};
  j["learn"] = json{{"restarts", cfg.learn.restarts},
                    {"max_iters", cfg.learn.max_iters},
                    {"rel_tol", cfg.learn.rel_tol},
                    {"grad_tol", cfg.learn.grad_tol},
                    {"learn_noise", cfg.learn.learn_noise},
                    {"q_rx", cfg.learn.q_rx},
                    {"q_tx", cfg.learn.q_tx},
                    {"lbfgs_memory", cfg.learn.lbfgs_memory},
                    {"bounds", bounds_json(cfg.learn.bounds)}};
  j["sparse"] = json{{"omp_sparsity", cfg.sparse.omp_sparsity},
                     {"amp_threshold", cfg.sparse.amp_threshold},
                     {"amp_iters", cfg.sparse.amp_iters},
                     {"oversampling", cfg.sparse.oversampling}};
  return j;
}

void check_known_keys(const json& user, const json& reference, const std::string& path) {
  if (!user.is_object()) return;
  if (!reference.is_object())
    throw ConfigError("field " + (path.empty() ? "<root>" : path) + ": unexpected object");
  for (const auto& [key, value] : user.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!reference.contains(key)) throw ConfigError("field " + here + ": unknown field");
    check_known_keys(value, reference.at(key), here);
  }
}

template <typename T>
T get_field(const json& j, const std::string& path, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("field " + (path.empty() ? std::string(key) : path + "." + key) + ": " +
                      e.what());
  }
}

std::pair<double, double> get_range(const json& j, const std::string& path, const char* key,
                                    std::pair<double, double> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2)
    throw ConfigError("field " + path + "." + key + ": expected [lo, hi]");
  return {v[0].get<double>(), v[1].get<double>()};
}

UraGeometry get_geom(const json& j, const char* key, UraGeometry fallback) {
  if (!j.contains(key)) return fallback;
  const json& g = j.at(key);
  UraGeometry out;
  out.ny = get_field<int>(g, key, "ny", fallback.ny);
  out.nz = get_field<int>(g, key, "nz", fallback.nz);
  if (out.ny < 1 || out.nz < 1) throw ConfigError(std::string("field ") + key + ": bad geometry");
  return out;
}

ExperimentConfig from_json(const json& j) {
  const ExperimentConfig d = default_experiment_config();
  check_known_keys(j, to_json(d), "");

  ExperimentConfig cfg = d;
  cfg.rx_geom = get_geom(j, "rx_geom", d.rx_geom);
  cfg.tx_geom = get_geom(j, "tx_geom", d.tx_geom);
  cfg.snr_db_list = get_field(j, "", "snr_db", d.snr_db_list);
  cfg.nt_list = get_field(j, "", "nt_list", d.nt_list);
  cfg.trials = get_field(j, "", "trials", d.trials);
  cfg.coherence_block = get_field(j, "", "coherence_block", d.coherence_block);
  cfg.p_active = get_field(j, "", "p_active", d.p_active);
  cfg.estimators = get_field(j, "", "estimators", d.estimators);
  cfg.master_seed = get_field(j, "", "master_seed", d.master_seed);
  cfg.threads = get_field(j, "", "threads", d.threads);

  if (j.contains("sv")) {
    const json& s = j.at("sv");
    cfg.sv.n_paths = get_field(s, "sv", "n_paths", d.sv.n_paths);
    cfg.sv.k_factor_db = get_field(s, "sv", "k_factor_db", d.sv.k_factor_db);
    cfg.sv.cluster_arrival_mean_ns =
        get_field(s, "sv", "cluster_arrival_mean_ns", d.sv.cluster_arrival_mean_ns);
    cfg.sv.ray_arrival_mean_ns = get_field(s, "sv", "ray_arrival_mean_ns", d.sv.ray_arrival_mean_ns);
    cfg.sv.cluster_decay_ns = get_field(s, "sv", "cluster_decay_ns", d.sv.cluster_decay_ns);
    cfg.sv.ray_decay_ns = get_field(s, "sv", "ray_decay_ns", d.sv.ray_decay_ns);
    cfg.sv.angular_spread_az_deg =
        get_field(s, "sv", "angular_spread_az_deg", d.sv.angular_spread_az_deg);
    cfg.sv.angular_spread_el_deg =
        get_field(s, "sv", "angular_spread_el_deg", d.sv.angular_spread_el_deg);
    cfg.sv.carrier_hz = get_field(s, "sv", "carrier_hz", d.sv.carrier_hz);
    cfg.sv.spacing_over_lambda =
        get_field(s, "sv", "spacing_over_lambda", d.sv.spacing_over_lambda);
    const auto refl = get_range(s, "sv", "reflection_loss_db",
                                {d.sv.reflection_loss_db_lo, d.sv.reflection_loss_db_hi});
    cfg.sv.reflection_loss_db_lo = refl.first;
    cfg.sv.reflection_loss_db_hi = refl.second;
    const auto ple = get_range(s, "sv", "path_loss_exponents",
                               {d.sv.path_loss_exp_los, d.sv.path_loss_exp_nlos});
    cfg.sv.path_loss_exp_los = ple.first;
    cfg.sv.path_loss_exp_nlos = ple.second;
  }

  if (j.contains("learn")) {
    const json& s = j.at("learn");
    cfg.learn.restarts = get_field(s, "learn", "restarts", d.learn.restarts);
    cfg.learn.max_iters = get_field(s, "learn", "max_iters", d.learn.max_iters);
    cfg.learn.rel_tol = get_field(s, "learn", "rel_tol", d.learn.rel_tol);
    cfg.learn.grad_tol = get_field(s, "learn", "grad_tol", d.learn.grad_tol);
    cfg.learn.learn_noise = get_field(s, "learn", "learn_noise", d.learn.learn_noise);
    cfg.learn.q_rx = get_field(s, "learn", "q_rx", d.learn.q_rx);
    cfg.learn.q_tx = get_field(s, "learn", "q_tx", d.learn.q_tx);
    cfg.learn.lbfgs_memory = get_field(s, "learn", "lbfgs_memory", d.learn.lbfgs_memory);
    if (s.contains("bounds")) {
      const json& b = s.at("bounds");
      HyperBounds& hb = cfg.learn.bounds;
      std::pair<double, double> r;
      r = get_range(b, "learn.bounds", "amp", {hb.amp_min, hb.amp_max});
      hb.amp_min = r.first;
      hb.amp_max = r.second;
      r = get_range(b, "learn.bounds", "weight", {hb.weight_min, hb.weight_max});
      hb.weight_min = r.first;
      hb.weight_max = r.second;
      r = get_range(b, "learn.bounds", "var", {hb.var_min, hb.var_max});
      hb.var_min = r.first;
      hb.var_max = r.second;
      hb.freq_abs_max = get_field(b, "learn.bounds", "freq_abs_max", hb.freq_abs_max);
      r = get_range(b, "learn.bounds", "l_diag", {hb.l_diag_min, hb.l_diag_max});
      hb.l_diag_min = r.first;
      hb.l_diag_max = r.second;
      r = get_range(b, "learn.bounds", "noise", {hb.noise_min, hb.noise_max});
      hb.noise_min = r.first;
      hb.noise_max = r.second;
    }
  }

  if (j.contains("sparse")) {
    const json& s = j.at("sparse");
    cfg.sparse.omp_sparsity = get_field(s, "sparse", "omp_sparsity", d.sparse.omp_sparsity);
    cfg.sparse.amp_threshold = get_field(s, "sparse", "amp_threshold", d.sparse.amp_threshold);
    cfg.sparse.amp_iters = get_field(s, "sparse", "amp_iters", d.sparse.amp_iters);
    cfg.sparse.oversampling = get_field(s, "sparse", "oversampling", d.sparse.oversampling);
  }
  return cfg;
}

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  cfg.learn.restarts = 2;
  cfg.learn.max_iters = 100;
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (j.is_object() && j.contains("config")) j = j.at("config");  // run manifest
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  return from_json(j);
}

void apply_override(ExperimentConfig& cfg, const std::string& key_eq_value) {
  const auto eq = key_eq_value.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + key_eq_value + "' is not key=value");
  const std::string key = key_eq_value.substr(0, eq);
  const std::string value = key_eq_value.substr(eq + 1);

  json j = json::parse(experiment_config_json(cfg));
  json parsed_value;
  try {
    parsed_value = json::parse(value);
  } catch (const json::parse_error&) {
    parsed_value = value;  // plain string
  }

  json* cursor = &j;
  size_t start = 0;
  for (;;) {
    const size_t dot = key.find('.', start);
    const std::string token = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (token.empty()) throw ConfigError("override '" + key + "': empty path segment");
    if (dot == std::string::npos) {
      (*cursor)[token] = parsed_value;
      break;
    }
    if (!cursor->contains(token)) throw ConfigError("override '" + key + "': unknown field");
    cursor = &(*cursor)[token];
    start = dot + 1;
  }
  cfg = from_json(j);
}

std::string experiment_config_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2); }

std::string manifest_json(const ExperimentConfig& cfg, const std::string& version) {
  json j;
  j["tool"] = "gpchan";
  j["version"] = version;
  j["seed"] = cfg.master_seed;
  j["config"] = json::parse(experiment_config_json(cfg));
  return j.dump(2) + "\n";
}

}  // namespace gpchan
