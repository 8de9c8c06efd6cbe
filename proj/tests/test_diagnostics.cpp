#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "saehb/diagnostics.hpp"
#include "saehb/grid.hpp"
#include "support/synthetic.hpp"

using namespace saehb;

namespace {

// Draw whose unit density at y equals `f` exactly: mean pinned at y and
// variance chosen as 1/(2 pi f^2).
ParameterDraw pinned_draw(double y, double f, double w) {
  ParameterDraw d;
  d.rho = 0.5;
  d.sigma2 = w / (2.0 * std::numbers::pi * f * f);
  d.beta = Eigen::VectorXd::Constant(1, y);
  d.u = Eigen::VectorXd::Zero(1);
  return d;
}

}  // namespace

TEST_CASE("equal densities give uniform importance weights", "[diagnostics]") {
  const std::vector<double> lf(64, -1.37);
  const auto iw = importance_weights_from_log(lf);
  CHECK_FALSE(iw.underflow);
  for (double v : iw.v) CHECK(v == Catch::Approx(1.0 / 64).margin(1e-15));
}

TEST_CASE("two-draw importance weights and cpo on exact densities", "[diagnostics]") {
  const double y = 1.25, w = 1.0;
  const std::vector<ParameterDraw> draws = {pinned_draw(y, 0.2, w), pinned_draw(y, 0.3, w)};
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(1);

  const auto iw = importance_weights(y, x, w, 0, draws);
  REQUIRE(iw.v.size() == 2);
  CHECK(iw.v[0] == Catch::Approx(0.6).margin(1e-12));
  CHECK(iw.v[1] == Catch::Approx(0.4).margin(1e-12));
  CHECK(iw.v[0] + iw.v[1] == Catch::Approx(1.0).margin(1e-12));

  CHECK(cpo(y, x, w, 0, draws) == Catch::Approx(0.24).margin(1e-12));

  // constant density: cpo equals it
  const std::vector<ParameterDraw> constant = {pinned_draw(y, 0.35, w), pinned_draw(y, 0.35, w)};
  CHECK(cpo(y, x, w, 0, constant) == Catch::Approx(0.35).margin(1e-12));
}

TEST_CASE("importance weights always sum to one", "[diagnostics]") {
  SeededStream s(3);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> lf(100);
    for (auto& v : lf) v = -700.0 + 1400.0 * s.uniform();
    const auto iw = importance_weights_from_log(lf);
    double sum = 0.0;
    for (double v : iw.v) sum += v;
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("degenerate densities fall back to uniform weights with a flag", "[diagnostics]") {
  const std::vector<ParameterDraw> draws = {pinned_draw(0.0, 0.2, 1.0), pinned_draw(0.0, 0.3, 1.0)};
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
  const auto iw = importance_weights(1e200, x, 1.0, 0, draws);
  CHECK(iw.underflow);
  CHECK(iw.v == std::vector<double>{0.5, 0.5});
}

TEST_CASE("deleted moments on degenerate draw sets", "[diagnostics]") {
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
  const double w = 4.0;

  // constant mean and variance across draws
  std::vector<ParameterDraw> same(2);
  for (auto& d : same) {
    d.sigma2 = 1.44;
    d.beta = Eigen::VectorXd::Constant(1, 2.5);
    d.u = Eigen::VectorXd::Zero(1);
  }
  const std::vector<double> uniform = {0.5, 0.5};
  const auto m = deleted_moments(x, w, 0, same, uniform);
  CHECK_FALSE(m.var_clamped);
  CHECK(m.mean == Catch::Approx(2.5).margin(1e-12));
  CHECK(m.variance == Catch::Approx(1.44 / 4.0).margin(1e-12));

  // all weight on the first draw
  std::vector<ParameterDraw> pair_draws(2);
  pair_draws[0].sigma2 = 0.81;
  pair_draws[0].beta = Eigen::VectorXd::Constant(1, 1.0);
  pair_draws[0].u = Eigen::VectorXd::Zero(1);
  pair_draws[1].sigma2 = 9.0;
  pair_draws[1].beta = Eigen::VectorXd::Constant(1, -7.0);
  pair_draws[1].u = Eigen::VectorXd::Zero(1);
  const std::vector<double> point = {1.0, 0.0};
  const auto mp = deleted_moments(x, w, 0, pair_draws, point);
  CHECK(mp.mean == Catch::Approx(1.0).margin(1e-12));
  CHECK(mp.variance == Catch::Approx(0.81 / 4.0).margin(1e-12));
}

TEST_CASE("vanishing predictive variance is clamped and flagged", "[diagnostics]") {
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
  std::vector<ParameterDraw> same(2);
  for (auto& d : same) {
    d.sigma2 = 1e-300;
    d.beta = Eigen::VectorXd::Constant(1, 1e8);
    d.u = Eigen::VectorXd::Zero(1);
  }
  const std::vector<double> uniform = {0.5, 0.5};
  const auto m = deleted_moments(x, 1.0, 0, same, uniform);
  CHECK(m.var_clamped);
  CHECK(m.variance == kDeletedVarFloor);
}

TEST_CASE("residuals standardize against the deleted moments", "[diagnostics]") {
  DeletedMoments m;
  m.mean = 0.7;
  m.variance = 0.0625;
  CHECK(cv_residual(0.7, m) == 0.0);
  CHECK(cv_residual(0.95, m) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("cpo never exceeds the best draw density", "[diagnostics]") {
  SeededStream s(9);
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
  std::vector<ParameterDraw> draws(30);
  for (auto& d : draws) {
    d.sigma2 = 0.2 + s.uniform();
    d.beta = Eigen::VectorXd::Constant(1, s.normal());
    d.u = Eigen::VectorXd::Zero(1);
  }
  const double y = 0.4, w = 2.0;
  double fmax = 0.0;
  for (const auto& d : draws)
    fmax = std::max(fmax, std::exp(detail::log_normal_density(y, d.unit_mean(x, 0), d.sigma2 / w)));
  CHECK(cpo(y, x, w, 0, draws) <= fmax * (1.0 + 1e-12));
}

TEST_CASE("unit diagnostics cover every record deterministically", "[diagnostics]") {
  const auto inst = synth::random_instance(77, 4, {6, 5, 7, 6}, 2, 0.3, 0.2, 3);
  const auto prob = validate_problem(inst.sample, inst.census, TransformSpec::identity());
  const auto grid = build_rho_grid(prob, 100, 1e-4);
  const auto draws = draw_parameters(prob, grid, 200, SeededStream(5), 2);

  const auto diag1 = unit_diagnostics(prob, draws, 1);
  const auto diag4 = unit_diagnostics(prob, draws, 4);
  REQUIRE(diag1.size() == static_cast<std::size_t>(prob.n));
  std::vector<long> counter(static_cast<std::size_t>(prob.D), 0);
  for (long i = 0; i < prob.n; ++i) {
    const auto& u = diag1[static_cast<std::size_t>(i)];
    CHECK(u.dense_area == prob.record_area[i]);
    CHECK(u.unit == ++counter[static_cast<std::size_t>(u.dense_area)]);
    CHECK(u.y == prob.y[static_cast<Eigen::Index>(i)]);
    CHECK(u.deleted_var > 0.0);
    CHECK(u.cpo > 0.0);
    CHECK(std::isfinite(u.residual));
    CHECK(u.deleted_mean == diag4[static_cast<std::size_t>(i)].deleted_mean);
    CHECK(u.residual == diag4[static_cast<std::size_t>(i)].residual);
    CHECK(u.cpo == diag4[static_cast<std::size_t>(i)].cpo);
  }
}

TEST_CASE("residuals and cpos are calibrated on model data", "[diagnostics]") {
  const auto inst = synth::model_instance(2026, 80, 50);
  const auto prob = validate_problem(inst.sample, inst.census, TransformSpec::log_shift(0.0));
  const auto grid = build_rho_grid(prob, 200, 1e-4);
  const auto draws = draw_parameters(prob, grid, 400, SeededStream(61), 4);
  const auto diag = unit_diagnostics(prob, draws, 4);

  double sum = 0.0, sumsq = 0.0;
  long low_cpo = 0;
  for (const auto& u : diag) {
    sum += u.residual;
    sumsq += u.residual * u.residual;
    if (u.cpo < 0.025) ++low_cpo;
    CHECK_FALSE(u.weight_underflow);
  }
  const auto n = static_cast<double>(diag.size());
  const double sd = std::sqrt((sumsq - sum * sum / n) / (n - 1));
  CHECK(sd > 0.9);
  CHECK(sd < 1.1);
  CHECK(static_cast<double>(low_cpo) / n < 0.03);
}
