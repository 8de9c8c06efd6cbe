#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace saehb {

namespace detail {
// Rank arithmetic with a nudge so exact-integer boundaries (e.g. H = 40,
// level = 0.95) are not flipped by the binary representation of the level.
inline long ceil_rank(double q) { return static_cast<long>(std::ceil(q - 1e-9)); }
inline long floor_rank(double q) { return static_cast<long>(std::floor(q + 1e-9)); }
}  // namespace detail

// Monte Carlo mean and variance with divisor H.
inline std::pair<double, double> mean_variance(std::span<const double> draws) {
  if (draws.size() < 2) throw std::invalid_argument("mean_variance: need at least two draws");
  double mean = 0.0;
  for (double v : draws) mean += v;
  mean /= static_cast<double>(draws.size());
  double var = 0.0;
  for (double v : draws) var += (v - mean) * (v - mean);
  var /= static_cast<double>(draws.size());
  return {mean, var};
}

// Equal-tail credible interval from order statistics: ranks
// ceil(H (1-level)/2) and ceil(H (1+level)/2), 1-indexed.
inline std::pair<double, double> equal_tail(std::span<const double> draws, double level) {
  if (!(level > 0.0) || !(level < 1.0)) throw std::invalid_argument("level must be in (0, 1)");
  const long H = static_cast<long>(draws.size());
  if (H < detail::ceil_rank(2.0 / (1.0 - level)))
    throw std::invalid_argument("equal_tail: too few draws for the requested level");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const long lo = detail::ceil_rank(H * (1.0 - level) / 2.0);
  const long hi = detail::ceil_rank(H * (1.0 + level) / 2.0);
  return {sorted[static_cast<std::size_t>(std::max(lo, 1L) - 1)],
          sorted[static_cast<std::size_t>(std::min(hi, H) - 1)]};
}

// Narrowest interval spanning m = floor(level H) order statistics; ties go to
// the leftmost window.
inline std::pair<double, double> hpd(std::span<const double> draws, double level) {
  if (!(level > 0.0) || !(level < 1.0)) throw std::invalid_argument("level must be in (0, 1)");
  const long H = static_cast<long>(draws.size());
  const long m = detail::floor_rank(level * static_cast<double>(H));
  if (m < 1 || m >= H) throw std::invalid_argument("hpd: too few draws for the requested level");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  long best_j = 0;
  double best_width = sorted[static_cast<std::size_t>(m)] - sorted[0];
  for (long j = 1; j + m < H; ++j) {
    const double width = sorted[static_cast<std::size_t>(j + m)] - sorted[static_cast<std::size_t>(j)];
    if (width < best_width) {
      best_width = width;
      best_j = j;
    }
  }
  return {sorted[static_cast<std::size_t>(best_j)], sorted[static_cast<std::size_t>(best_j + m)]};
}

// sd / mean; undefined when the mean is not positive.
inline std::optional<double> coefficient_of_variation(double mean, double sd) {
  if (!(mean > 0.0)) return std::nullopt;
  return sd / mean;
}

struct PosteriorSummary {
  double mean = 0.0;
  double variance = 0.0;
  double sd = 0.0;
  double cv = 0.0;  // valid only when cv_defined
  bool cv_defined = false;
  double et_lo = 0.0, et_hi = 0.0;
  double hpd_lo = 0.0, hpd_hi = 0.0;
  double level = 0.0;
};

inline PosteriorSummary summarize(std::span<const double> draws, double level) {
  PosteriorSummary s;
  s.level = level;
  std::tie(s.mean, s.variance) = mean_variance(draws);
  s.sd = std::sqrt(s.variance);
  if (auto cv = coefficient_of_variation(s.mean, s.sd)) {
    s.cv = *cv;
    s.cv_defined = true;
  }
  std::tie(s.et_lo, s.et_hi) = equal_tail(draws, level);
  std::tie(s.hpd_lo, s.hpd_hi) = hpd(draws, level);
  return s;
}

}  // namespace saehb
