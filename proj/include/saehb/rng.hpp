#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace saehb {

namespace detail {

inline std::uint64_t split_mix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t key, std::uint64_t element) {
  std::uint64_t s = key ^ (element * 0xDA942042E4DD58B5ULL + 0x9E3779B97F4A7C15ULL);
  return split_mix64(s);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

// Derivation-path tags used across the library.  Streams are addressed by
// (seed, path of tags/indices); equal paths reproduce equal variate sequences
// no matter which thread consumes them or in what order.
namespace path {
inline constexpr std::uint64_t params = 0x01;
inline constexpr std::uint64_t rho = 0x02;
inline constexpr std::uint64_t sigma2 = 0x03;
inline constexpr std::uint64_t beta = 0x04;
inline constexpr std::uint64_t effects = 0x05;
inline constexpr std::uint64_t census = 0x06;
inline constexpr std::uint64_t subsample = 0x07;
inline constexpr std::uint64_t covariates = 0x08;
inline constexpr std::uint64_t responses = 0x09;
inline constexpr std::uint64_t sample_indices = 0x0A;
inline constexpr std::uint64_t replicate = 0x0B;
}  // namespace path

// Counter-style random stream: an xoshiro256++ engine whose state is a pure
// function of (seed, derivation path).  derive() children depend only on the
// parent's identity, never on how many variates the parent has consumed.
class SeededStream {
 public:
  explicit SeededStream(std::uint64_t seed)
      : key_(detail::hash_combine(0x8BADF00D5EEDULL, seed)) {
    init_state();
  }

  [[nodiscard]] SeededStream derive(std::uint64_t element) const {
    return SeededStream(detail::hash_combine(key_, element), FromKey{});
  }
  [[nodiscard]] SeededStream derive(std::uint64_t a, std::uint64_t b) const {
    return derive(a).derive(b);
  }
  [[nodiscard]] SeededStream derive(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    return derive(a).derive(b).derive(c);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl64(s_[3], 45);
    return result;
  }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]; safe as a log() argument.
  double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  // Unbiased integer on [0, n).
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r < threshold);
    return r % n;
  }

  // Standard normal via Box-Muller; pairs are cached so consumption order is
  // part of the stream contract.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Gamma(shape, rate) via the Marsaglia-Tsang squeeze; shape < 1 is boosted
  // through the Gamma(shape+1) power identity.
  double gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
      throw std::invalid_argument("gamma: shape and rate must be positive");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0, 1.0);
      const double u = uniform_pos();
      return g * std::pow(u, 1.0 / shape) / rate;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

 private:
  struct FromKey {};
  SeededStream(std::uint64_t key, FromKey) : key_(key) { init_state(); }

  void init_state() {
    std::uint64_t s = key_;
    for (auto& w : s_) w = detail::split_mix64(s);
    have_spare_ = false;
    spare_ = 0.0;
  }

  std::uint64_t key_;
  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace saehb
