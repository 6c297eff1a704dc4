#include "gpchan/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gpchan {

void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.parent_path() / (".tmp-" + path.filename().string());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("atomic_write_file: cannot open " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("atomic_write_file: write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

std::string exact_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_matrix_dump(const std::filesystem::path& path, const Eigen::MatrixXcd& m) {
  std::string s;
  s += std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      s += exact_double(m(i, j).real()) + "," + exact_double(m(i, j).imag()) + "\n";
  atomic_write_file(path, s);
}

Eigen::MatrixXcd read_matrix_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_matrix_dump: cannot open " + path.string());
  Eigen::Index rows = 0, cols = 0;
  in >> rows >> cols;
  if (!in || rows < 0 || cols < 0)
    throw std::runtime_error("read_matrix_dump: bad header in " + path.string());
  Eigen::MatrixXcd m(rows, cols);
  std::string line;
  std::getline(in, line);  // rest of the header line
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!std::getline(in, line))
        throw std::runtime_error("read_matrix_dump: truncated file " + path.string());
      const auto comma = line.find(',');
      if (comma == std::string::npos)
        throw std::runtime_error("read_matrix_dump: malformed entry in " + path.string());
      m(i, j) = {std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))};
    }
  return m;
}

namespace {

std::string field_or_empty(double v) { return std::isfinite(v) ? format_double(v) : ""; }

}  // namespace

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string s = "estimator,snr_db,n_t,trial,nmse,nmse_db,se_bps_hz,rel_se,energy_ratio,lml,status\n";
  for (const auto& r : rows) {
    s += r.estimator + "," + format_double(r.snr_db) + "," + std::to_string(r.n_t) + "," +
         std::to_string(r.trial) + "," + format_double(r.nmse) + "," + field_or_empty(r.nmse_db) +
         "," + format_double(r.se_bps_hz) + "," + format_double(r.rel_se) + "," +
         format_double(r.energy_ratio) + "," + (r.lml ? format_double(*r.lml) : "") + "," +
         r.status + "\n";
  }
  return s;
}

std::string timings_csv(const std::vector<ResultRow>& rows) {
  std::string s = "estimator,snr_db,n_t,trial,wall_ms\n";
  for (const auto& r : rows) {
    s += r.estimator + "," + format_double(r.snr_db) + "," + std::to_string(r.n_t) + "," +
         std::to_string(r.trial) + "," + format_double(r.wall_ms) + "\n";
  }
  return s;
}

std::string hyper_records_text(const std::vector<HyperRecord>& records) {
  std::string s;
  for (const auto& rec : records) {
    s += "# snr_db=" + format_double(rec.snr_db) + " n_t=" + std::to_string(rec.n_t) +
         " trial=" + std::to_string(rec.trial) + "\n";
    s += rec.text;
    s += "\n";
  }
  return s;
}

std::string summary_json(const std::vector<SummaryRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json e;
    e["estimator"] = r.estimator;
    e["snr_db"] = r.snr_db;
    e["n_t"] = r.n_t;
    e["trials"] = r.trials;
    e["nmse_db"] = std::isfinite(r.nmse_db) ? nlohmann::json(r.nmse_db) : nlohmann::json();
    e["se_bps_hz"] = r.se_bps_hz;
    e["rel_se_pct"] = r.rel_se_pct;
    e["pilot_savings_pct"] = r.pilot_savings_pct;
    e["energy_savings_pct"] = r.energy_savings_pct;
    j.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

}  // namespace gpchan
