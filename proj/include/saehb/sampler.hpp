#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "saehb/grid.hpp"
#include "saehb/parallel.hpp"
#include "saehb/rng.hpp"

namespace saehb {

struct ParameterDraw {
  double rho = 0.0;
  double sigma2 = 0.0;
  Eigen::VectorXd beta;
  Eigen::VectorXd u;  // per dense area

  double unit_mean(const Eigen::VectorXd& x, int dense_area) const {
    return x.dot(beta) + u[dense_area];
  }
};

// Discrete draw from the grid masses followed by a uniform jitter of one cell
// width, clamped back into the truncated support.
inline double draw_rho(const RhoGrid& grid, SeededStream& stream) {
  const double u = stream.uniform();
  const auto it = std::upper_bound(grid.cumulative.begin(), grid.cumulative.end(), u);
  const std::size_t idx = it == grid.cumulative.end()
                              ? grid.cumulative.size() - 1
                              : static_cast<std::size_t>(it - grid.cumulative.begin());
  const double jitter = stream.uniform() / grid.R;
  const double rho = grid.points[idx].rho + jitter;
  return std::clamp(rho, grid.epsilon, 1.0 - grid.epsilon);
}

// sigma^-2 | rho, y is Gamma((n - p)/2, gamma(rho)/2); returns sigma^2.
inline double draw_sigma2(const GridPoint& gp, long n, int p, SeededStream& stream) {
  const double shape = 0.5 * static_cast<double>(n - p);
  const double precision = stream.gamma(shape, 0.5 * gp.gamma);
  return 1.0 / precision;
}

// beta | rho, sigma^2, y is N(beta_hat, sigma^2 Q^-1); uses the stored
// Cholesky factor, never an explicit inverse.
inline Eigen::VectorXd draw_beta(const GridPoint& gp, double sigma2, SeededStream& stream) {
  Eigen::VectorXd z(gp.beta_hat.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = stream.normal();
  Eigen::VectorXd t =
      gp.chol_lower.transpose().triangularView<Eigen::Upper>().solve(z);
  return gp.beta_hat + std::sqrt(sigma2) * t;
}

// Area effects: sampled areas shrink the survey residual by lambda_d with
// conditional variance sigma^2 / (w_d. + kappa); nonsampled areas draw from
// the prior N(0, sigma^2 rho / (1 - rho)).
inline Eigen::VectorXd draw_area_effects(const ValidatedProblem& prob, double rho, double sigma2,
                                         const Eigen::VectorXd& beta, SeededStream& stream) {
  const double kappa = (1.0 - rho) / rho;
  Eigen::VectorXd u(prob.D);
  for (int d = 0; d < prob.D; ++d) {
    const auto& a = prob.areas[static_cast<std::size_t>(d)];
    if (a.sampled()) {
      const double lambda = a.w_dot / (a.w_dot + kappa);
      const double mean = lambda * (a.ybar - a.xbar.dot(beta));
      const double var = sigma2 / (a.w_dot + kappa);
      u[d] = mean + std::sqrt(var) * stream.normal();
    } else {
      u[d] = std::sqrt(sigma2 / kappa) * stream.normal();
    }
  }
  return u;
}

// One joint draw along the chain rho -> sigma^2 -> beta -> u.  The grid
// quantities are re-evaluated exactly at the jittered rho.
inline ParameterDraw draw_parameter(const ValidatedProblem& prob, const RhoGrid& grid,
                                    const SeededStream& draw_stream) {
  ParameterDraw out;
  SeededStream s_rho = draw_stream.derive(path::rho);
  out.rho = draw_rho(grid, s_rho);
  const GridPoint gp = grid_point(prob, out.rho);
  SeededStream s_sigma = draw_stream.derive(path::sigma2);
  out.sigma2 = draw_sigma2(gp, prob.n, prob.p, s_sigma);
  SeededStream s_beta = draw_stream.derive(path::beta);
  out.beta = draw_beta(gp, out.sigma2, s_beta);
  SeededStream s_u = draw_stream.derive(path::effects);
  out.u = draw_area_effects(prob, out.rho, out.sigma2, out.beta, s_u);
  return out;
}

// H independent joint draws; draw h uses the sub-stream (params, h), so the
// result is identical for any worker count.
inline std::vector<ParameterDraw> draw_parameters(const ValidatedProblem& prob,
                                                  const RhoGrid& grid, int H,
                                                  const SeededStream& root,
                                                  unsigned threads = 1) {
  if (H < 1) throw std::invalid_argument("draw_parameters: H must be positive");
  std::vector<ParameterDraw> draws(static_cast<std::size_t>(H));
  parallel_for(static_cast<std::size_t>(H), threads, [&](std::size_t h) {
    draws[h] = draw_parameter(prob, grid, root.derive(path::params, h));
  });
  return draws;
}

}  // namespace saehb
