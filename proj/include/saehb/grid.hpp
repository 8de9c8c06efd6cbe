#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "saehb/problem.hpp"

namespace saehb {

// Raised when the normal-equation matrix cannot be factored at a rho value;
// the grid builder masks such points, direct callers see the error.
class GridPointError : public std::runtime_error {
 public:
  GridPointError(double rho, const std::string& what) : std::runtime_error(what), rho_(rho) {}
  double rho() const noexcept { return rho_; }

 private:
  double rho_;
};

// Everything the conditional draws need at one rho: shrinkage factors
// lambda_d, normal-equation matrix Q with its Cholesky factor, the weighted
// regression solution beta_hat, the residual quadratic form gamma, and the
// marginal log-kernel of rho.
struct GridPoint {
  double rho = 0.0;
  double kappa = 0.0;              // (1 - rho) / rho
  std::vector<double> lambda;      // per dense area; 0 placeholder when nonsampled
  Eigen::MatrixXd Q;               // p x p
  Eigen::MatrixXd chol_lower;      // L with Q = L L'
  Eigen::VectorXd beta_hat;
  double gamma = 0.0;
  double log_det_Q = 0.0;
  double log_kernel = 0.0;
};

inline GridPoint grid_point(const ValidatedProblem& prob, double rho) {
  if (!(rho > 0.0) || !(rho < 1.0))
    throw std::invalid_argument("grid_point: rho must lie strictly inside (0, 1)");
  GridPoint gp;
  gp.rho = rho;
  gp.kappa = (1.0 - rho) / rho;

  gp.lambda.assign(static_cast<std::size_t>(prob.D), 0.0);
  double sum_log_lambda = 0.0;
  Eigen::MatrixXd q = prob.within_xx;
  Eigen::VectorXd pvec = prob.within_xy;
  for (int d = 0; d < prob.D; ++d) {
    const auto& a = prob.areas[static_cast<std::size_t>(d)];
    if (!a.sampled()) continue;
    const double lam = a.w_dot / (a.w_dot + gp.kappa);
    gp.lambda[static_cast<std::size_t>(d)] = lam;
    sum_log_lambda += std::log(lam);
    const double scale = gp.kappa * lam;
    q.noalias() += scale * a.xbar * a.xbar.transpose();
    pvec.noalias() += scale * a.ybar * a.xbar;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(q);
  if (llt.info() != Eigen::Success)
    throw GridPointError(rho, "normal-equation matrix not positive definite at rho = " +
                                  std::to_string(rho));
  gp.Q = std::move(q);
  gp.chol_lower = llt.matrixL();
  gp.beta_hat = llt.solve(pvec);
  gp.log_det_Q = 2.0 * gp.chol_lower.diagonal().array().log().sum();

  // Residual quadratic form, summed directly to avoid cancellation.
  double gamma = 0.0;
  for (long i = 0; i < prob.n; ++i) {
    const auto& a = prob.areas[static_cast<std::size_t>(prob.record_area[i])];
    const double resid = (prob.y[i] - a.ybar) - (prob.X.row(i).transpose() - a.xbar).dot(gp.beta_hat);
    gamma += prob.record_weight[i] * resid * resid;
  }
  for (int d = 0; d < prob.D; ++d) {
    const auto& a = prob.areas[static_cast<std::size_t>(d)];
    if (!a.sampled()) continue;
    const double dev = a.ybar - a.xbar.dot(gp.beta_hat);
    gamma += gp.kappa * gp.lambda[static_cast<std::size_t>(d)] * dev * dev;
  }
  if (!(gamma > 0.0))
    throw GridPointError(rho, "degenerate fit: residual quadratic form is not positive");
  gp.gamma = gamma;

  gp.log_kernel = 0.5 * prob.D_star * std::log(gp.kappa) - 0.5 * gp.log_det_Q -
                  0.5 * static_cast<double>(prob.n - prob.p) * std::log(gamma) +
                  0.5 * sum_log_lambda;
  return gp;
}

// Log-sum-exp normalization; exposed so the mass computation is testable in
// isolation and safe for kernels spanning hundreds of orders of magnitude.
inline std::vector<double> normalized_masses_from_log(std::span<const double> log_kernels) {
  if (log_kernels.empty()) throw std::invalid_argument("no log kernels to normalize");
  const double m = *std::max_element(log_kernels.begin(), log_kernels.end());
  if (!std::isfinite(m)) throw std::logic_error("log kernels are not finite");
  std::vector<double> masses(log_kernels.size());
  double total = 0.0;
  for (std::size_t i = 0; i < log_kernels.size(); ++i) {
    masses[i] = std::exp(log_kernels[i] - m);
    total += masses[i];
  }
  for (auto& v : masses) v /= total;
  return masses;
}

// Discretized marginal posterior of rho on the midpoint grid r -> (r-0.5)/R,
// r = 1..R-1, restricted to [epsilon, 1-epsilon].
struct RhoGrid {
  int R = 0;
  double epsilon = 0.0;
  std::vector<GridPoint> points;   // ascending rho
  std::vector<double> masses;      // normalized over retained points
  std::vector<double> cumulative;  // prefix sums of masses
  int rejected = 0;                // numerically singular points masked out

  void rebuild_cumulative() {
    cumulative.resize(masses.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
      acc += masses[i];
      cumulative[i] = acc;
    }
  }

  const GridPoint& modal_point() const {
    if (points.empty()) throw std::logic_error("empty rho grid");
    const std::size_t i = static_cast<std::size_t>(
        std::max_element(masses.begin(), masses.end()) - masses.begin());
    return points[i];
  }
};

inline RhoGrid build_rho_grid(const ValidatedProblem& prob, int R, double epsilon) {
  if (R < 10) throw std::invalid_argument("build_rho_grid: R must be at least 10");
  if (!(epsilon > 0.0) || !(epsilon < 0.5))
    throw std::invalid_argument("build_rho_grid: epsilon must lie in (0, 0.5)");
  RhoGrid grid;
  grid.R = R;
  grid.epsilon = epsilon;
  std::vector<double> log_kernels;
  for (int r = 1; r <= R; ++r) {
    const double rho = (r - 0.5) / R;
    if (rho < epsilon || rho > 1.0 - epsilon) continue;
    try {
      GridPoint gp = grid_point(prob, rho);
      log_kernels.push_back(gp.log_kernel);
      grid.points.push_back(std::move(gp));
    } catch (const GridPointError&) {
      ++grid.rejected;
    }
  }
  if (grid.points.empty())
    throw ValidationError("empty_grid", "no admissible rho grid points in [epsilon, 1-epsilon]");
  grid.masses = normalized_masses_from_log(log_kernels);
  grid.rebuild_cumulative();
  return grid;
}

}  // namespace saehb
