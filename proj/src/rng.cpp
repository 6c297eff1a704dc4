#include "gpchan/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace gpchan {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (b + kGolden + (a << 6) + (a >> 2)));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : key_(splitmix64(seed)), state_(key_) {}

RngStream RngStream::split(std::string_view label) const {
  return RngStream(combine(key_, fnv1a(label)), 0);
}

RngStream RngStream::split(std::uint64_t index) const {
  return RngStream(combine(key_, splitmix64(index)), 0);
}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  std::uint64_t x = state_;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // Rejection-free modulo is fine here; n is tiny compared to 2^64.
  return next_u64() % n;
}

double RngStream::normal() {
  // Box-Muller, cosine branch only. u1 in (0, 1] avoids log(0).
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::complex<double> RngStream::complex_normal() {
  return {normal() * M_SQRT1_2, normal() * M_SQRT1_2};
}

double RngStream::exponential(double mean) {
  if (mean <= 0.0) throw std::invalid_argument("exponential: mean must be positive");
  return -mean * std::log(1.0 - uniform());
}

int RngStream::poisson(double mean) {
  if (mean < 0.0) throw std::invalid_argument("poisson: mean must be nonnegative");
  // Knuth's product method; all means used here are small.
  const double limit = std::exp(-mean);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform();
  } while (p > limit);
  return k - 1;
}

Eigen::VectorXd RngStream::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Eigen::VectorXcd RngStream::complex_normal_vector(Eigen::Index n) {
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = complex_normal();
  return v;
}

}  // namespace gpchan
