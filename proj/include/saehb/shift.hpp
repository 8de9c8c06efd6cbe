#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "saehb/grid.hpp"
#include "saehb/problem.hpp"

namespace saehb {

// Fisher moment skewness m3 / m2^(3/2) with divisor-n central moments.
inline double fisher_skewness(std::span<const double> values) {
  if (values.size() < 3) throw std::invalid_argument("fisher_skewness: need at least 3 values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : values) {
    const double c = v - mean;
    m2 += c * c;
    m3 += c * c * c;
  }
  m2 /= n;
  m3 /= n;
  if (!(m2 > 0.0)) throw std::invalid_argument("fisher_skewness: zero variance");
  return m3 / std::pow(m2, 1.5);
}

struct ShiftCandidate {
  double c = 0.0;
  double skewness = 0.0;
};

struct ShiftSelection {
  double c = 0.0;
  double skewness = 0.0;
  std::vector<ShiftCandidate> curve;  // ascending c
};

// Residual skewness of one fitted candidate: plug in the modal grid rho, form
// beta_hat and the shrunken area effects there, and measure the skewness of
// the unit-level residuals on the transformed scale.
inline double shift_residual_skewness(const ValidatedProblem& prob, const RhoGrid& grid) {
  const GridPoint& gp = grid.modal_point();
  std::vector<double> u_hat(static_cast<std::size_t>(prob.D), 0.0);
  for (int d = 0; d < prob.D; ++d) {
    const auto& a = prob.areas[static_cast<std::size_t>(d)];
    if (!a.sampled()) continue;
    u_hat[static_cast<std::size_t>(d)] =
        gp.lambda[static_cast<std::size_t>(d)] * (a.ybar - a.xbar.dot(gp.beta_hat));
  }
  std::vector<double> resid(static_cast<std::size_t>(prob.n));
  for (long i = 0; i < prob.n; ++i)
    resid[static_cast<std::size_t>(i)] =
        prob.y[i] - prob.X.row(i).dot(gp.beta_hat) - u_hat[static_cast<std::size_t>(prob.record_area[i])];
  return fisher_skewness(resid);
}

// Sweeps the candidate shifts, fits each transformed problem, and returns the
// candidate whose residual skewness is closest to zero (ties to the smaller
// shift).  The full curve is returned so flat regions can be inspected.
inline ShiftSelection select_shift(const SurveySample& sample, const CensusFrame& census,
                                   std::span<const double> candidates, int R, double epsilon) {
  if (candidates.empty())
    throw ValidationError("empty_candidates", "shift selection needs a nonempty candidate grid");
  std::vector<double> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  ShiftSelection sel;
  bool have_best = false;
  for (double c : sorted) {
    const ValidatedProblem prob = validate_problem(sample, census, TransformSpec::log_shift(c));
    const RhoGrid grid = build_rho_grid(prob, R, epsilon);
    const double skew = shift_residual_skewness(prob, grid);
    sel.curve.push_back(ShiftCandidate{c, skew});
    if (!have_best || std::abs(skew) < std::abs(sel.skewness)) {
      sel.c = c;
      sel.skewness = skew;
      have_best = true;
    }
  }
  return sel;
}

}  // namespace saehb
