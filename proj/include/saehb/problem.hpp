#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "saehb/types.hpp"

namespace saehb {

struct WeightedMeans {
  Eigen::VectorXd xbar;
  double ybar = 0.0;
  double w_dot = 0.0;
};

// Weighted area means (xbar_d, ybar_d) and total weight w_d. for one area's
// records; `y` is on the model scale.
inline WeightedMeans area_weighted_means(std::span<const double> w, std::span<const double> y,
                                         const Eigen::MatrixXd& x) {
  if (w.empty() || w.size() != y.size() || static_cast<Eigen::Index>(w.size()) != x.rows())
    throw std::invalid_argument("area_weighted_means: inconsistent or empty inputs");
  WeightedMeans m;
  m.xbar = Eigen::VectorXd::Zero(x.cols());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) throw ValidationError("nonpositive_weight", "het_weight must be positive");
    m.w_dot += w[i];
    m.ybar += w[i] * y[i];
    m.xbar += w[i] * x.row(static_cast<Eigen::Index>(i)).transpose();
  }
  m.ybar /= m.w_dot;
  m.xbar /= m.w_dot;
  return m;
}

struct AreaSummary {
  int label = 0;            // caller-facing area label
  long n_d = 0;             // sampled unit count (0 for nonsampled areas)
  std::int64_t N_d = 0;     // population size
  double w_dot = 0.0;       // sum of sampled het weights
  double ybar = 0.0;        // weighted mean response, model scale
  Eigen::VectorXd xbar;     // weighted mean covariates

  bool sampled() const { return n_d > 0; }
};

// Checked, transformed, and precomputed model inputs.  Record arrays run over
// sampled units in input order; areas are densely indexed by ascending label.
struct ValidatedProblem {
  int D = 0;       // total areas (sampled plus census-only)
  int D_star = 0;  // sampled areas
  int p = 0;
  long n = 0;
  TransformSpec transform;

  std::vector<AreaSummary> areas;
  Eigen::MatrixXd X;                   // n x p design rows
  Eigen::VectorXd y;                   // transformed responses
  std::vector<int> record_area;        // dense area index per record
  std::vector<double> record_weight;   // w_di
  std::vector<double> record_welfare;  // E_di, original scale
  std::vector<double> record_survey_weight;
  std::vector<std::vector<CensusRow>> census_by_area;  // dense index -> cells

  // Rho-independent sufficient pieces for the per-rho closed forms:
  // within_xx = sum w (x - xbar)(x - xbar)', within_xy the same with the
  // response, within_yy the response sum of squares.
  Eigen::MatrixXd within_xx;
  Eigen::VectorXd within_xy;
  double within_yy = 0.0;

  int area_index(int label) const {
    auto it = std::lower_bound(areas.begin(), areas.end(), label,
                               [](const AreaSummary& a, int l) { return a.label < l; });
    if (it == areas.end() || it->label != label)
      throw std::invalid_argument("unknown area label " + std::to_string(label));
    return static_cast<int>(it - areas.begin());
  }
};

// Validates inputs against the model requirements (positive weights, design
// matrix of full column rank so the posterior is proper, population sizes
// consistent with sample and census counts), applies the welfare transform,
// and precomputes the per-area summaries used by every grid evaluation.
inline ValidatedProblem validate_problem(const SurveySample& sample, const CensusFrame& census,
                                         const TransformSpec& transform) {
  if (sample.records.empty())
    throw ValidationError("empty_sample", "survey sample has no records");
  const int p = sample.p > 0 ? sample.p : static_cast<int>(sample.records.front().x.size());
  if (p < 1) throw ValidationError("bad_dimension", "at least one covariate column is required");

  ValidatedProblem prob;
  prob.p = p;
  prob.transform = transform;
  prob.n = static_cast<long>(sample.records.size());
  if (prob.n < p + 1)
    throw ValidationError("insufficient_sample",
                          "need at least p + 1 = " + std::to_string(p + 1) + " records, got " +
                              std::to_string(prob.n));

  // Dense area indexing over the union of labels seen anywhere.
  std::map<int, long> sampled_count;
  for (const auto& r : sample.records) {
    if (r.x.size() != p)
      throw ValidationError("bad_dimension", "covariate row length mismatch in sample");
    if (!(r.het_weight > 0.0))
      throw ValidationError("nonpositive_weight", "sample het_weight must be positive");
    if (!(r.survey_weight > 0.0))
      throw ValidationError("nonpositive_weight", "survey_weight must be positive");
    ++sampled_count[r.area];
  }
  std::map<int, std::int64_t> census_count;
  for (const auto& c : census.rows) {
    if (c.x.size() != p)
      throw ValidationError("bad_dimension", "covariate row length mismatch in census");
    if (!(c.het_weight > 0.0))
      throw ValidationError("nonpositive_weight", "census het_weight must be positive");
    if (c.count < 1)
      throw ValidationError("bad_count", "census cell count must be a positive integer");
    census_count[c.area] += c.count;
  }
  std::map<int, std::int64_t> declared_sizes;
  for (const auto& [label, size] : census.area_sizes) {
    if (declared_sizes.count(label))
      throw ValidationError("size_mismatch", "duplicate population size for area " + std::to_string(label));
    declared_sizes[label] = size;
  }

  std::map<int, int> dense;  // label -> dense index
  for (const auto& [label, cnt] : sampled_count) dense.emplace(label, 0);
  for (const auto& [label, cnt] : census_count) dense.emplace(label, 0);
  for (const auto& [label, size] : declared_sizes) dense.emplace(label, 0);
  int next_index = 0;
  for (auto& [label, idx] : dense) idx = next_index++;
  prob.D = next_index;

  prob.areas.resize(prob.D);
  prob.census_by_area.resize(prob.D);
  for (const auto& [label, idx] : dense) {
    auto& a = prob.areas[idx];
    a.label = label;
    a.n_d = sampled_count.count(label) ? sampled_count[label] : 0;
    const std::int64_t generated = census_count.count(label) ? census_count[label] : 0;
    a.N_d = a.n_d + generated;
    if (auto it = declared_sizes.find(label); it != declared_sizes.end() && it->second != a.N_d)
      throw ValidationError("size_mismatch",
                            "area " + std::to_string(label) + ": declared N_d = " +
                                std::to_string(it->second) + " but n_d + census counts = " +
                                std::to_string(a.N_d));
    if (a.sampled()) ++prob.D_star;
  }
  for (const auto& c : census.rows) prob.census_by_area[dense[c.area]].push_back(c);

  // Transformed responses and stacked design.
  prob.X.resize(prob.n, p);
  prob.y.resize(prob.n);
  prob.record_area.resize(prob.n);
  prob.record_weight.resize(prob.n);
  prob.record_welfare.resize(prob.n);
  prob.record_survey_weight.resize(prob.n);
  for (long i = 0; i < prob.n; ++i) {
    const auto& r = sample.records[static_cast<std::size_t>(i)];
    prob.X.row(i) = r.x.transpose();
    prob.y[i] = apply_transform(r.welfare, transform);
    prob.record_area[i] = dense[r.area];
    prob.record_weight[i] = r.het_weight;
    prob.record_welfare[i] = r.welfare;
    prob.record_survey_weight[i] = r.survey_weight;
  }

  // Proper posterior requires a full-column-rank design.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(prob.X);
  if (qr.rank() < p)
    throw ValidationError("rank_deficient",
                          "design matrix must have full column rank for a proper posterior "
                          "(rank " + std::to_string(qr.rank()) + " < p = " + std::to_string(p) + ")");

  // Per-area weighted means, then the centered cross products every grid
  // point reuses.
  std::vector<Eigen::VectorXd> xsum(prob.D, Eigen::VectorXd::Zero(p));
  std::vector<double> ysum(prob.D, 0.0);
  for (long i = 0; i < prob.n; ++i) {
    const int d = prob.record_area[i];
    auto& a = prob.areas[d];
    a.w_dot += prob.record_weight[i];
    ysum[d] += prob.record_weight[i] * prob.y[i];
    xsum[d] += prob.record_weight[i] * prob.X.row(i).transpose();
  }
  for (int d = 0; d < prob.D; ++d) {
    auto& a = prob.areas[static_cast<std::size_t>(d)];
    if (a.sampled()) {
      a.ybar = ysum[d] / a.w_dot;
      a.xbar = xsum[d] / a.w_dot;
    } else {
      a.xbar = Eigen::VectorXd::Zero(p);
    }
  }

  prob.within_xx = Eigen::MatrixXd::Zero(p, p);
  prob.within_xy = Eigen::VectorXd::Zero(p);
  prob.within_yy = 0.0;
  for (long i = 0; i < prob.n; ++i) {
    const auto& a = prob.areas[static_cast<std::size_t>(prob.record_area[i])];
    const Eigen::VectorXd xc = prob.X.row(i).transpose() - a.xbar;
    const double yc = prob.y[i] - a.ybar;
    const double w = prob.record_weight[i];
    prob.within_xx.noalias() += w * xc * xc.transpose();
    prob.within_xy.noalias() += w * yc * xc;
    prob.within_yy += w * yc * yc;
  }
  return prob;
}

}  // namespace saehb
