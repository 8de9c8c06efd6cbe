#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "saehb/types.hpp"

namespace saehb {

// FGT contribution of one welfare value; alpha = 0 is the head-count
// indicator with 0^0 := 1 inside the poor set.
inline double fgt_contribution(double welfare, double alpha, double z) {
  if (!(welfare < z)) return 0.0;
  if (alpha == 0.0) return 1.0;
  const double gap = (z - welfare) / z;
  if (alpha == 1.0) return gap;
  return std::pow(gap, alpha);
}

// Target for one area: either an FGT order (streaming-accumulable) or a
// custom functional of the full area welfare vector (forces materialization
// of the completed census for that area).
struct IndicatorSpec {
  double z = 0.0;             // poverty line, welfare units
  TransformSpec transform;    // welfare map used when completing the census
  double alpha = 0.0;         // FGT order; ignored when custom is set
  std::function<double(std::span<const double>)> custom;

  bool is_custom() const { return static_cast<bool>(custom); }

  static IndicatorSpec fgt(double alpha, double z, TransformSpec t) {
    IndicatorSpec s;
    s.alpha = alpha;
    s.z = z;
    s.transform = t;
    if (!(alpha >= 0.0)) throw std::invalid_argument("fgt order must be nonnegative");
    if (!(z > 0.0)) throw std::invalid_argument("poverty line must be positive");
    return s;
  }
};

// FGT value of one completed area: mean of the contributions over the
// N_d = |sample| + |generated| population units.
inline double fgt_for_draw(std::span<const double> sample_welfare,
                           std::span<const double> completed_welfare, double alpha, double z) {
  const std::size_t N = sample_welfare.size() + completed_welfare.size();
  if (N == 0) throw std::invalid_argument("fgt_for_draw: empty area");
  double sum = 0.0;
  for (double e : sample_welfare) sum += fgt_contribution(e, alpha, z);
  double gen = 0.0;
  for (double e : completed_welfare) gen += fgt_contribution(e, alpha, z);
  return (sum + gen) / static_cast<double>(N);
}

}  // namespace saehb
