#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "saehb/parallel.hpp"
#include "saehb/sampler.hpp"

namespace saehb {

namespace detail {

inline double log_normal_density(double y, double mean, double variance) {
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) -
         (y - mean) * (y - mean) / (2.0 * variance);
}

inline double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

// log f(Y_di | theta^(h)) for every h.
inline std::vector<double> unit_log_densities(double y, const Eigen::VectorXd& x, double w,
                                              int dense_area, std::span<const ParameterDraw> draws) {
  std::vector<double> lf(draws.size());
  for (std::size_t h = 0; h < draws.size(); ++h)
    lf[h] = log_normal_density(y, draws[h].unit_mean(x, dense_area), draws[h].sigma2 / w);
  return lf;
}

}  // namespace detail

// Normalized inverse-density weights v_di^(h): a softmax of the negated log
// densities, so the deleted mixture never under- or overflows.  If every
// density degenerates the weights fall back to uniform with a flag.
struct ImportanceWeights {
  std::vector<double> v;
  bool underflow = false;
};

inline ImportanceWeights importance_weights_from_log(std::span<const double> log_densities) {
  if (log_densities.empty()) throw std::invalid_argument("no draws for importance weights");
  ImportanceWeights out;
  out.v.resize(log_densities.size());
  std::vector<double> neg(log_densities.size());
  for (std::size_t h = 0; h < log_densities.size(); ++h) neg[h] = -log_densities[h];
  const double lse = detail::log_sum_exp(neg);
  if (!std::isfinite(lse)) {
    out.underflow = true;
    const double uniform = 1.0 / static_cast<double>(log_densities.size());
    for (auto& w : out.v) w = uniform;
    return out;
  }
  for (std::size_t h = 0; h < log_densities.size(); ++h) out.v[h] = std::exp(neg[h] - lse);
  return out;
}

inline ImportanceWeights importance_weights(double y, const Eigen::VectorXd& x, double w,
                                            int dense_area, std::span<const ParameterDraw> draws) {
  return importance_weights_from_log(detail::unit_log_densities(y, x, w, dense_area, draws));
}

// Case-deletion predictive mean and variance of Y_di mixed over the draws
// with weights v; the variance is clamped away from zero with a flag.
struct DeletedMoments {
  double mean = 0.0;
  double variance = 0.0;
  bool var_clamped = false;
};

inline constexpr double kDeletedVarFloor = 1e-12;

inline DeletedMoments deleted_moments(const Eigen::VectorXd& x, double w, int dense_area,
                                      std::span<const ParameterDraw> draws,
                                      std::span<const double> v) {
  if (draws.size() != v.size() || draws.empty())
    throw std::invalid_argument("deleted_moments: draw/weight size mismatch");
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t h = 0; h < draws.size(); ++h) {
    const double mu = draws[h].unit_mean(x, dense_area);
    m1 += v[h] * mu;
    m2 += v[h] * (draws[h].sigma2 / w + mu * mu);
  }
  DeletedMoments out;
  out.mean = m1;
  out.variance = m2 - m1 * m1;
  if (out.variance < kDeletedVarFloor) {
    out.variance = kDeletedVarFloor;
    out.var_clamped = true;
  }
  return out;
}

inline double cv_residual(double y, const DeletedMoments& m) {
  return (y - m.mean) / std::sqrt(m.variance);
}

// Conditional predictive ordinate: harmonic mean of the unit density over the
// draws, evaluated in log space.
inline double cpo(double y, const Eigen::VectorXd& x, double w, int dense_area,
                  std::span<const ParameterDraw> draws) {
  if (draws.empty()) throw std::invalid_argument("cpo: no draws");
  const std::vector<double> lf = detail::unit_log_densities(y, x, w, dense_area, draws);
  std::vector<double> neg(lf.size());
  for (std::size_t h = 0; h < lf.size(); ++h) neg[h] = -lf[h];
  const double lse = detail::log_sum_exp(neg);
  return std::exp(std::log(static_cast<double>(draws.size())) - lse);
}

struct UnitDiagnostics {
  int dense_area = 0;
  long unit = 0;  // 1-based position within the area's records, input order
  double y = 0.0;
  double deleted_mean = 0.0;
  double deleted_var = 0.0;
  double residual = 0.0;
  double cpo = 0.0;
  bool var_clamped = false;
  bool weight_underflow = false;
};

// All per-unit diagnostics in one pass over the log densities per unit.
inline std::vector<UnitDiagnostics> unit_diagnostics(const ValidatedProblem& prob,
                                                     std::span<const ParameterDraw> draws,
                                                     unsigned threads = 1) {
  if (draws.empty()) throw std::invalid_argument("unit_diagnostics: no draws");
  std::vector<UnitDiagnostics> out(static_cast<std::size_t>(prob.n));
  std::vector<long> within_area_index(static_cast<std::size_t>(prob.n));
  std::vector<long> counter(static_cast<std::size_t>(prob.D), 0);
  for (long i = 0; i < prob.n; ++i)
    within_area_index[static_cast<std::size_t>(i)] =
        ++counter[static_cast<std::size_t>(prob.record_area[i])];

  parallel_for(static_cast<std::size_t>(prob.n), threads, [&](std::size_t i) {
    const Eigen::VectorXd x = prob.X.row(static_cast<Eigen::Index>(i)).transpose();
    const double w = prob.record_weight[i];
    const int d = prob.record_area[i];
    const double y = prob.y[static_cast<Eigen::Index>(i)];
    const std::vector<double> lf = detail::unit_log_densities(y, x, w, d, draws);
    const ImportanceWeights iw = importance_weights_from_log(lf);
    const DeletedMoments dm = deleted_moments(x, w, d, draws, iw.v);
    std::vector<double> neg(lf.size());
    for (std::size_t h = 0; h < lf.size(); ++h) neg[h] = -lf[h];
    UnitDiagnostics u;
    u.dense_area = d;
    u.unit = within_area_index[i];
    u.y = y;
    u.deleted_mean = dm.mean;
    u.deleted_var = dm.variance;
    u.residual = cv_residual(y, dm);
    u.cpo = std::exp(std::log(static_cast<double>(draws.size())) - detail::log_sum_exp(neg));
    u.var_clamped = dm.var_clamped;
    u.weight_underflow = iw.underflow;
    out[i] = u;
  });
  return out;
}

}  // namespace saehb
