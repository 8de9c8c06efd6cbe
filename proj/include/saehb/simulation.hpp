#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "saehb/predictor.hpp"
#include "saehb/summaries.hpp"

namespace saehb {

// Model-based simulation study: fixed finite populations per area with
// Bernoulli covariates, repeated response generation, survey samples fixed
// across replicates, HB fit and design-based direct estimates per replicate.
struct SimConfig {
  int D = 80;
  std::vector<std::int64_t> area_sizes;  // N_d; broadcast from N_d_default when empty
  std::vector<long> sample_sizes;        // n_d; broadcast from n_d_default when empty
  std::int64_t N_d_default = 250;
  long n_d_default = 50;

  int replicates = 200;  // I
  int H = 500;
  int R = 500;
  double epsilon = 1e-4;
  double level = 0.95;
  std::uint64_t seed = 0x5AEB;
  unsigned threads = 0;

  // True model: Y = x'beta + u_d + e, welfare E = exp(Y), poverty line z.
  Eigen::VectorXd beta = (Eigen::VectorXd(3) << 3.0, 0.03, -0.04).finished();
  double sigma2 = 0.25;
  double rho = 0.0225 / 0.2725;  // sigma_u = 0.15
  double z = 12.0;
  std::vector<double> alphas = {0.0, 1.0};

  bool use_covariates = true;  // two Bernoulli dummies; otherwise intercept only
  double p1_base = 0.3, p1_slope = 0.5, p2 = 0.2;

  int p() const { return use_covariates ? 3 : 1; }
  std::vector<std::int64_t> resolved_area_sizes() const {
    if (!area_sizes.empty()) return area_sizes;
    return std::vector<std::int64_t>(static_cast<std::size_t>(D), N_d_default);
  }
  std::vector<long> resolved_sample_sizes() const {
    if (!sample_sizes.empty()) return sample_sizes;
    return std::vector<long>(static_cast<std::size_t>(D), n_d_default);
  }
};

struct SimPopulation {
  int D = 0;
  int p = 0;
  std::vector<std::int64_t> N_d;
  std::vector<std::int64_t> area_offset;  // start of each area's units
  Eigen::MatrixXd X;                      // N x p, areas contiguous
  std::int64_t total = 0;
};

// Covariates only; these stay fixed across replicates.  Area d (1-based in
// the intensity formula) gets X1 ~ Bern(p1_base + p1_slope d / D).
inline SimPopulation generate_population(const SimConfig& cfg, SeededStream stream) {
  if (cfg.D < 1) throw std::invalid_argument("generate_population: D must be positive");
  const auto sizes = cfg.resolved_area_sizes();
  if (static_cast<int>(sizes.size()) != cfg.D)
    throw std::invalid_argument("generate_population: area_sizes length mismatch");
  if (cfg.beta.size() != cfg.p())
    throw std::invalid_argument("generate_population: beta length does not match covariate layout");
  SimPopulation pop;
  pop.D = cfg.D;
  pop.p = cfg.p();
  pop.N_d = sizes;
  pop.area_offset.resize(sizes.size());
  for (std::size_t d = 0; d < sizes.size(); ++d) {
    pop.area_offset[d] = pop.total;
    pop.total += sizes[d];
  }
  pop.X.resize(pop.total, pop.p);
  std::int64_t row = 0;
  for (int d = 0; d < cfg.D; ++d) {
    const double p1 = cfg.p1_base + cfg.p1_slope * static_cast<double>(d + 1) / cfg.D;
    for (std::int64_t k = 0; k < sizes[static_cast<std::size_t>(d)]; ++k, ++row) {
      pop.X(row, 0) = 1.0;
      if (cfg.use_covariates) {
        pop.X(row, 1) = stream.uniform() < p1 ? 1.0 : 0.0;
        pop.X(row, 2) = stream.uniform() < cfg.p2 ? 1.0 : 0.0;
      }
    }
  }
  return pop;
}

// One replicate of responses: u_d then unit errors, in population order.
inline Eigen::VectorXd generate_responses(const SimPopulation& pop, const SimConfig& cfg,
                                          SeededStream stream) {
  const double sigma_u = std::sqrt(cfg.sigma2 * cfg.rho / (1.0 - cfg.rho));
  const double sigma_e = std::sqrt(cfg.sigma2);
  Eigen::VectorXd y(pop.total);
  for (int d = 0; d < pop.D; ++d) {
    const double u = sigma_u * stream.normal();
    const std::int64_t off = pop.area_offset[static_cast<std::size_t>(d)];
    const std::int64_t N = pop.N_d[static_cast<std::size_t>(d)];
    for (std::int64_t k = 0; k < N; ++k)
      y[off + k] = pop.X.row(off + k).dot(cfg.beta) + u + sigma_e * stream.normal();
  }
  return y;
}

// Per-area simple random samples without replacement; global unit indices,
// sorted.  Fixed across replicates when drawn from a fixed stream path.
inline std::vector<std::vector<std::int64_t>> srswor_sample(const SimPopulation& pop,
                                                            std::span<const long> n_d,
                                                            SeededStream stream) {
  if (static_cast<int>(n_d.size()) != pop.D)
    throw std::invalid_argument("srswor_sample: sample size list length mismatch");
  std::vector<std::vector<std::int64_t>> sel(static_cast<std::size_t>(pop.D));
  for (int d = 0; d < pop.D; ++d) {
    const std::int64_t N = pop.N_d[static_cast<std::size_t>(d)];
    const long n = n_d[static_cast<std::size_t>(d)];
    if (n < 0 || n > N)
      throw std::invalid_argument("srswor_sample: n_d out of range for area " + std::to_string(d + 1));
    std::set<std::int64_t> pool;
    for (std::int64_t j = N - n; j < N; ++j) {
      const auto t = static_cast<std::int64_t>(stream.uniform_below(static_cast<std::uint64_t>(j + 1)));
      if (!pool.insert(t).second) pool.insert(j);
    }
    auto& v = sel[static_cast<std::size_t>(d)];
    v.reserve(static_cast<std::size_t>(n));
    const std::int64_t off = pop.area_offset[static_cast<std::size_t>(d)];
    for (std::int64_t j : pool) v.push_back(off + j);
  }
  return sel;
}

// Hajek direct estimate of the area FGT with its linearized design variance
// under simple random sampling without replacement (finite-population
// corrected); the CV is undefined when the estimate is zero.
struct DirectEstimate {
  double estimate = 0.0;
  double cv = 0.0;
  bool cv_defined = false;
};

inline DirectEstimate direct_fgt(std::span<const double> welfare, std::span<const double> weights,
                                 double alpha, double z, std::int64_t N_d) {
  const std::size_t n = welfare.size();
  if (n == 0 || n != weights.size()) throw std::invalid_argument("direct_fgt: bad inputs");
  double wsum = 0.0, gsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0)) throw std::invalid_argument("direct_fgt: weights must be positive");
    wsum += weights[i];
    gsum += weights[i] * fgt_contribution(welfare[i], alpha, z);
  }
  DirectEstimate out;
  out.estimate = gsum / wsum;
  if (n < 2) return out;
  const double f = static_cast<double>(n) / static_cast<double>(N_d);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = weights[i] * (fgt_contribution(welfare[i], alpha, z) - out.estimate) / wsum;
    ss += e * e;
  }
  const double var = (1.0 - f) * (static_cast<double>(n) / (static_cast<double>(n) - 1.0)) * ss;
  if (out.estimate > 0.0 && var >= 0.0) {
    out.cv = std::sqrt(var) / out.estimate;
    out.cv_defined = true;
  }
  return out;
}

struct AreaMetrics {
  int area_label = 0;
  long n_d = 0;
  std::int64_t N_d = 0;
  double mc_mean_hb = 0.0;
  double mc_mean_true = 0.0;
  double mse = 0.0;
  double cov_et_pct = 0.0;
  double cov_hpd_pct = 0.0;
  double width_et = 0.0;
  double width_hpd = 0.0;
  double mean_cv_pct = 0.0;         // over replicates with a defined HB cv
  double mean_cv_direct_pct = 0.0;  // over replicates with a defined direct cv
};

struct PooledMetrics {
  double cov_et_pct = 0.0;
  double cov_hpd_pct = 0.0;
  double width_et = 0.0;
  double width_hpd = 0.0;
  double mean_cv_pct = 0.0;
  double mean_cv_direct_pct = 0.0;
};

struct StudyMetrics {
  std::vector<double> alphas;
  std::vector<std::vector<AreaMetrics>> per_area;  // [alpha][area]
  std::vector<PooledMetrics> pooled;               // [alpha]
  int replicates = 0;
  double wall_seconds = 0.0;
};

namespace detail {

struct CellResult {
  double hb_mean = 0.0, truth = 0.0, sqerr = 0.0;
  double width_et = 0.0, width_hpd = 0.0;
  bool et_hit = false, hpd_hit = false;
  double cv_hb = 0.0, cv_direct = 0.0;
  bool cv_hb_defined = false, cv_direct_defined = false;
};

}  // namespace detail

inline StudyMetrics run_study(const SimConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.replicates < 1) throw std::invalid_argument("run_study: need at least one replicate");
  if (cfg.alphas.empty()) throw std::invalid_argument("run_study: no FGT orders requested");
  const SeededStream study_root(cfg.seed);
  const SimPopulation pop = generate_population(cfg, study_root.derive(path::covariates));
  const auto n_d = cfg.resolved_sample_sizes();
  if (static_cast<int>(n_d.size()) != cfg.D)
    throw std::invalid_argument("run_study: sample_sizes length mismatch");
  const auto sampled =
      srswor_sample(pop, n_d, study_root.derive(path::sample_indices));

  // Fixed survey design rows and count-aggregated out-of-sample census cells.
  std::vector<char> in_sample(static_cast<std::size_t>(pop.total), 0);
  for (const auto& v : sampled)
    for (std::int64_t idx : v) in_sample[static_cast<std::size_t>(idx)] = 1;
  CensusFrame census;
  for (int d = 0; d < cfg.D; ++d) {
    std::map<std::vector<double>, std::int64_t> cells;
    const std::int64_t off = pop.area_offset[static_cast<std::size_t>(d)];
    for (std::int64_t k = 0; k < pop.N_d[static_cast<std::size_t>(d)]; ++k) {
      if (in_sample[static_cast<std::size_t>(off + k)]) continue;
      std::vector<double> key(pop.p);
      for (int j = 0; j < pop.p; ++j) key[static_cast<std::size_t>(j)] = pop.X(off + k, j);
      ++cells[key];
    }
    for (const auto& [key, count] : cells) {
      CensusRow row;
      row.area = d + 1;
      row.het_weight = 1.0;
      row.count = count;
      row.x = Eigen::Map<const Eigen::VectorXd>(key.data(), pop.p);
      census.rows.push_back(std::move(row));
    }
  }

  const TransformSpec transform = TransformSpec::log_shift(0.0);
  std::vector<IndicatorSpec> specs;
  for (double a : cfg.alphas) specs.push_back(IndicatorSpec::fgt(a, cfg.z, transform));

  const std::size_t n_alpha = cfg.alphas.size();
  const auto cell_count = n_alpha * static_cast<std::size_t>(cfg.D);
  std::vector<std::vector<detail::CellResult>> results(
      static_cast<std::size_t>(cfg.replicates), std::vector<detail::CellResult>(cell_count));

  parallel_for(static_cast<std::size_t>(cfg.replicates), cfg.threads, [&](std::size_t i) {
    const Eigen::VectorXd y =
        generate_responses(pop, cfg, study_root.derive(path::responses, i));

    SurveySample sample;
    sample.p = pop.p;
    for (int d = 0; d < cfg.D; ++d) {
      const double design_weight = static_cast<double>(pop.N_d[static_cast<std::size_t>(d)]) /
                                   std::max<long>(n_d[static_cast<std::size_t>(d)], 1);
      for (std::int64_t idx : sampled[static_cast<std::size_t>(d)]) {
        SurveyRecord r;
        r.area = d + 1;
        r.welfare = std::exp(y[idx]);
        r.het_weight = 1.0;
        r.survey_weight = design_weight;
        r.x = pop.X.row(idx).transpose();
        sample.records.push_back(std::move(r));
      }
    }

    const ValidatedProblem prob = validate_problem(sample, census, transform);
    const RhoGrid grid = build_rho_grid(prob, cfg.R, cfg.epsilon);
    const IndicatorDraws draws =
        hb_draws(prob, grid, specs, cfg.H, study_root.derive(path::replicate, i), 1);

    auto& slot = results[i];
    for (int d = 0; d < cfg.D; ++d) {
      // Finite-population truth for this replicate.
      const std::int64_t off = pop.area_offset[static_cast<std::size_t>(d)];
      const std::int64_t N = pop.N_d[static_cast<std::size_t>(d)];
      std::vector<double> g_true(n_alpha, 0.0);
      for (std::int64_t k = 0; k < N; ++k) {
        const double e = std::exp(y[off + k]);
        for (std::size_t a = 0; a < n_alpha; ++a)
          g_true[a] += fgt_contribution(e, cfg.alphas[a], cfg.z);
      }

      std::vector<double> s_welfare, s_weights;
      for (std::int64_t idx : sampled[static_cast<std::size_t>(d)]) {
        s_welfare.push_back(std::exp(y[idx]));
        s_weights.push_back(static_cast<double>(N) / static_cast<double>(n_d[static_cast<std::size_t>(d)]));
      }

      const int dense = prob.area_index(d + 1);
      for (std::size_t a = 0; a < n_alpha; ++a) {
        const PosteriorSummary s = summarize(draws.area_draws(a, dense), cfg.level);
        detail::CellResult& cell = slot[a * static_cast<std::size_t>(cfg.D) + static_cast<std::size_t>(d)];
        cell.truth = g_true[a] / static_cast<double>(N);
        cell.hb_mean = s.mean;
        cell.sqerr = (s.mean - cell.truth) * (s.mean - cell.truth);
        cell.width_et = s.et_hi - s.et_lo;
        cell.width_hpd = s.hpd_hi - s.hpd_lo;
        cell.et_hit = cell.truth >= s.et_lo && cell.truth <= s.et_hi;
        cell.hpd_hit = cell.truth >= s.hpd_lo && cell.truth <= s.hpd_hi;
        cell.cv_hb = s.cv;
        cell.cv_hb_defined = s.cv_defined;
        if (!s_welfare.empty()) {
          const DirectEstimate de = direct_fgt(s_welfare, s_weights, cfg.alphas[a], cfg.z, N);
          cell.cv_direct = de.cv;
          cell.cv_direct_defined = de.cv_defined;
        }
      }
    }
  });

  // Sequential reduction in replicate order.
  StudyMetrics metrics;
  metrics.alphas = cfg.alphas;
  metrics.replicates = cfg.replicates;
  metrics.per_area.assign(n_alpha, std::vector<AreaMetrics>(static_cast<std::size_t>(cfg.D)));
  metrics.pooled.assign(n_alpha, PooledMetrics{});
  const double I = static_cast<double>(cfg.replicates);
  for (std::size_t a = 0; a < n_alpha; ++a) {
    long pooled_cv_hb_n = 0, pooled_cv_dir_n = 0;
    for (int d = 0; d < cfg.D; ++d) {
      AreaMetrics& am = metrics.per_area[a][static_cast<std::size_t>(d)];
      am.area_label = d + 1;
      am.n_d = n_d[static_cast<std::size_t>(d)];
      am.N_d = pop.N_d[static_cast<std::size_t>(d)];
      long cv_hb_n = 0, cv_dir_n = 0;
      for (int i = 0; i < cfg.replicates; ++i) {
        const auto& cell = results[static_cast<std::size_t>(i)]
                                  [a * static_cast<std::size_t>(cfg.D) + static_cast<std::size_t>(d)];
        am.mc_mean_hb += cell.hb_mean;
        am.mc_mean_true += cell.truth;
        am.mse += cell.sqerr;
        am.cov_et_pct += cell.et_hit ? 1.0 : 0.0;
        am.cov_hpd_pct += cell.hpd_hit ? 1.0 : 0.0;
        am.width_et += cell.width_et;
        am.width_hpd += cell.width_hpd;
        if (cell.cv_hb_defined) {
          am.mean_cv_pct += 100.0 * cell.cv_hb;
          ++cv_hb_n;
        }
        if (cell.cv_direct_defined) {
          am.mean_cv_direct_pct += 100.0 * cell.cv_direct;
          ++cv_dir_n;
        }
      }
      am.mc_mean_hb /= I;
      am.mc_mean_true /= I;
      am.mse /= I;
      am.cov_et_pct *= 100.0 / I;
      am.cov_hpd_pct *= 100.0 / I;
      am.width_et /= I;
      am.width_hpd /= I;
      am.mean_cv_pct = cv_hb_n > 0 ? am.mean_cv_pct / cv_hb_n : std::numeric_limits<double>::quiet_NaN();
      am.mean_cv_direct_pct =
          cv_dir_n > 0 ? am.mean_cv_direct_pct / cv_dir_n : std::numeric_limits<double>::quiet_NaN();

      PooledMetrics& pm = metrics.pooled[a];
      pm.cov_et_pct += am.cov_et_pct;
      pm.cov_hpd_pct += am.cov_hpd_pct;
      pm.width_et += am.width_et;
      pm.width_hpd += am.width_hpd;
      // pooled CV means skip areas where every replicate left the CV undefined
      if (!std::isnan(am.mean_cv_pct)) {
        pm.mean_cv_pct += am.mean_cv_pct;
        ++pooled_cv_hb_n;
      }
      if (!std::isnan(am.mean_cv_direct_pct)) {
        pm.mean_cv_direct_pct += am.mean_cv_direct_pct;
        ++pooled_cv_dir_n;
      }
    }
    PooledMetrics& pm = metrics.pooled[a];
    pm.cov_et_pct /= cfg.D;
    pm.cov_hpd_pct /= cfg.D;
    pm.width_et /= cfg.D;
    pm.width_hpd /= cfg.D;
    pm.mean_cv_pct = pooled_cv_hb_n > 0 ? pm.mean_cv_pct / pooled_cv_hb_n
                                        : std::numeric_limits<double>::quiet_NaN();
    pm.mean_cv_direct_pct = pooled_cv_dir_n > 0
                                ? pm.mean_cv_direct_pct / pooled_cv_dir_n
                                : std::numeric_limits<double>::quiet_NaN();
  }
  metrics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return metrics;
}

}  // namespace saehb
