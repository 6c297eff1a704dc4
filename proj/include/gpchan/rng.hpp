#pragma once

#include <complex>
#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace gpchan {

/// Deterministic splittable random stream.
///
/// A stream is identified by an immutable 64-bit key. Child streams derive
/// their key from (parent key, label), so the numbers drawn from any stream
/// depend only on the chain of seeds and labels that produced it, never on
/// the order in which sibling streams are consumed. This is what makes
/// parallel Monte-Carlo trials reproduce the sequential results exactly.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  RngStream split(std::string_view label) const;
  RngStream split(std::uint64_t index) const;

  std::uint64_t key() const { return key_; }

  /// Uniform double in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in {0, ..., n-1}; n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal draw.
  double normal();
  /// Circularly symmetric complex normal with E|x|^2 = 1.
  std::complex<double> complex_normal();
  double exponential(double mean);
  int poisson(double mean);

  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::VectorXcd complex_normal_vector(Eigen::Index n);

 private:
  RngStream(std::uint64_t key, int /*tag*/) : key_(key), state_(key) {}

  std::uint64_t next_u64();

  std::uint64_t key_;
  std::uint64_t state_;
};

}  // namespace gpchan
