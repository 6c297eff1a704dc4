#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpchan/eval.hpp"

namespace gpchan {

/// Writes to a temporary sibling and renames into place, so the target is
/// either fully written or absent.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

/// Matrix dump: header line "rows cols", then one "re,im" pair per line in
/// row-major order. Values round-trip exactly.
void write_matrix_dump(const std::filesystem::path& path, const Eigen::MatrixXcd& m);
Eigen::MatrixXcd read_matrix_dump(const std::filesystem::path& path);

/// Plain '.'-decimal formatting, no locale.
std::string format_double(double v);

/// Deterministic result table. Non-finite and absent values print as empty
/// fields; wall-clock timing is kept out of this file so reruns are
/// byte-identical.
std::string results_csv(const std::vector<ResultRow>& rows);

/// Per-row wall-clock companion table (not reproducible across runs).
std::string timings_csv(const std::vector<ResultRow>& rows);

/// Learned hyperparameter records, one block per (snr, budget, trial).
std::string hyper_records_text(const std::vector<HyperRecord>& records);

std::string summary_json(const std::vector<SummaryRow>& rows);

}  // namespace gpchan
