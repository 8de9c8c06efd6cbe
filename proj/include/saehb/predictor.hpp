#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "saehb/indicator.hpp"
#include "saehb/parallel.hpp"
#include "saehb/sampler.hpp"

namespace saehb {

// Generates the out-of-sample welfare values of one area under `draw` and
// feeds them to sink(welfare), cell by cell in census order.  Returns the
// generated unit count.  Streaming: nothing is retained here.
template <class Sink>
std::int64_t complete_area(std::span<const CensusRow> cells, const ParameterDraw& draw,
                           int dense_area, const TransformSpec& transform, SeededStream& stream,
                           Sink&& sink) {
  std::int64_t generated = 0;
  for (const auto& cell : cells) {
    const double mean = draw.unit_mean(cell.x, dense_area);
    const double sd = std::sqrt(draw.sigma2 / cell.het_weight);
    for (std::int64_t k = 0; k < cell.count; ++k) {
      const double y = mean + sd * stream.normal();
      sink(invert_transform(y, transform));
      ++generated;
    }
  }
  return generated;
}

// Monte Carlo draws of the indicators: values[i] holds indicator i as a
// D x H row-major array (area-major, h contiguous).
struct IndicatorDraws {
  int D = 0;
  int H = 0;
  std::vector<std::vector<double>> values;

  std::span<const double> area_draws(std::size_t indicator, int dense_area) const {
    return std::span<const double>(values[indicator]).subspan(
        static_cast<std::size_t>(dense_area) * static_cast<std::size_t>(H),
        static_cast<std::size_t>(H));
  }
};

namespace detail {

// Specs sharing a welfare transform share one census completion pass.
struct TransformGroup {
  TransformSpec transform;
  std::vector<std::size_t> spec_indices;
  bool materialize = false;
};

inline bool same_transform(const TransformSpec& a, const TransformSpec& b) {
  return a.kind == b.kind && a.shift == b.shift;
}

inline std::vector<TransformGroup> group_by_transform(std::span<const IndicatorSpec> specs) {
  std::vector<TransformGroup> groups;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const TransformGroup& g) {
      return same_transform(g.transform, specs[i].transform);
    });
    if (it == groups.end()) {
      groups.push_back(TransformGroup{specs[i].transform, {i}, specs[i].is_custom()});
    } else {
      it->spec_indices.push_back(i);
      it->materialize = it->materialize || specs[i].is_custom();
    }
  }
  return groups;
}

struct PredictorPlan {
  std::vector<TransformGroup> groups;
  std::vector<std::vector<double>> sample_welfare;  // per dense area, record order
  std::vector<std::vector<double>> sample_fgt_sum;  // [spec][area], non-custom only
};

inline PredictorPlan make_plan(const ValidatedProblem& prob, std::span<const IndicatorSpec> specs) {
  if (specs.empty()) throw std::invalid_argument("no indicator specs given");
  PredictorPlan plan;
  plan.groups = group_by_transform(specs);
  plan.sample_welfare.resize(static_cast<std::size_t>(prob.D));
  for (long i = 0; i < prob.n; ++i)
    plan.sample_welfare[static_cast<std::size_t>(prob.record_area[i])].push_back(
        prob.record_welfare[i]);
  plan.sample_fgt_sum.assign(specs.size(), std::vector<double>(static_cast<std::size_t>(prob.D), 0.0));
  for (std::size_t s = 0; s < specs.size(); ++s) {
    if (specs[s].is_custom()) continue;
    for (int d = 0; d < prob.D; ++d) {
      double acc = 0.0;
      for (double e : plan.sample_welfare[static_cast<std::size_t>(d)])
        acc += fgt_contribution(e, specs[s].alpha, specs[s].z);
      plan.sample_fgt_sum[s][static_cast<std::size_t>(d)] = acc;
    }
  }
  return plan;
}

}  // namespace detail

// Posterior-predictive indicator draws.  For each h: one joint parameter draw
// (sub-stream (params, h)), then each area's census is completed with the
// per-(h, area) stream (census, h, d) and every indicator is evaluated on the
// same completed census.  FGT specs accumulate streaming sums; custom specs
// see the materialized area welfare vector.
inline IndicatorDraws hb_draws(const ValidatedProblem& prob, const RhoGrid& grid,
                               std::span<const IndicatorSpec> specs, int H,
                               const SeededStream& root, unsigned threads = 1) {
  if (H < 1) throw std::invalid_argument("hb_draws: H must be positive");
  const detail::PredictorPlan plan = detail::make_plan(prob, specs);
  IndicatorDraws out;
  out.D = prob.D;
  out.H = H;
  out.values.assign(specs.size(),
                    std::vector<double>(static_cast<std::size_t>(prob.D) * static_cast<std::size_t>(H)));

  parallel_for(static_cast<std::size_t>(H), threads, [&](std::size_t h) {
    const ParameterDraw draw = draw_parameter(prob, grid, root.derive(path::params, h));
    std::vector<double> gen_sum(specs.size());
    std::vector<double> welfare_buf;
    for (int d = 0; d < prob.D; ++d) {
      const auto& cells = prob.census_by_area[static_cast<std::size_t>(d)];
      const auto& sample_e = plan.sample_welfare[static_cast<std::size_t>(d)];
      std::fill(gen_sum.begin(), gen_sum.end(), 0.0);
      std::int64_t generated = 0;
      for (const auto& group : plan.groups) {
        // Same derivation path per group: re-running the completion for a
        // second transform group regenerates identical model-scale draws.
        SeededStream cstream = root.derive(path::census, h, static_cast<std::uint64_t>(d));
        if (group.materialize) {
          welfare_buf.assign(sample_e.begin(), sample_e.end());
          generated = complete_area(std::span<const CensusRow>(cells), draw, d, group.transform,
                                    cstream, [&](double e) {
                                      welfare_buf.push_back(e);
                                      for (std::size_t s : group.spec_indices)
                                        if (!specs[s].is_custom())
                                          gen_sum[s] += fgt_contribution(e, specs[s].alpha, specs[s].z);
                                    });
          for (std::size_t s : group.spec_indices)
            if (specs[s].is_custom())
              out.values[s][static_cast<std::size_t>(d) * static_cast<std::size_t>(H) + h] =
                  specs[s].custom(welfare_buf);
        } else {
          generated = complete_area(std::span<const CensusRow>(cells), draw, d, group.transform,
                                    cstream, [&](double e) {
                                      for (std::size_t s : group.spec_indices)
                                        gen_sum[s] += fgt_contribution(e, specs[s].alpha, specs[s].z);
                                    });
        }
      }
      const double N_d = static_cast<double>(sample_e.size()) + static_cast<double>(generated);
      for (std::size_t s = 0; s < specs.size(); ++s) {
        if (specs[s].is_custom()) continue;
        out.values[s][static_cast<std::size_t>(d) * static_cast<std::size_t>(H) + h] =
            (plan.sample_fgt_sum[s][static_cast<std::size_t>(d)] + gen_sum[s]) / N_d;
      }
    }
  });
  return out;
}

// Design-based shortcut: per (h, d), an equal-probability without-replacement
// subsample of the completed census and its Hajek estimate of the indicator.
// Shares the (params, h) and (census, h, d) stream paths with hb_draws, so a
// subsample equal to the full census reproduces hb_draws bitwise.
inline IndicatorDraws fast_hb_draws(const ValidatedProblem& prob, const RhoGrid& grid,
                                    std::span<const IndicatorSpec> specs, int H,
                                    std::int64_t subsample_size, const SeededStream& root,
                                    unsigned threads = 1) {
  if (H < 1) throw std::invalid_argument("fast_hb_draws: H must be positive");
  if (subsample_size < 1) throw std::invalid_argument("fast_hb_draws: subsample size must be positive");
  for (const auto& s : specs)
    if (s.is_custom())
      throw std::invalid_argument(
          "fast_hb_draws: a design-based estimator is only defined for FGT specs");
  for (const auto& a : prob.areas)
    if (subsample_size > a.N_d)
      throw ValidationError("bad_subsample",
                            "subsample size exceeds the population of area " +
                                std::to_string(a.label));
  const detail::PredictorPlan plan = detail::make_plan(prob, specs);
  IndicatorDraws out;
  out.D = prob.D;
  out.H = H;
  out.values.assign(specs.size(),
                    std::vector<double>(static_cast<std::size_t>(prob.D) * static_cast<std::size_t>(H)));

  parallel_for(static_cast<std::size_t>(H), threads, [&](std::size_t h) {
    const ParameterDraw draw = draw_parameter(prob, grid, root.derive(path::params, h));
    std::vector<std::int64_t> selected;
    std::vector<double> sample_sum(specs.size()), gen_sum(specs.size());
    for (int d = 0; d < prob.D; ++d) {
      const auto& cells = prob.census_by_area[static_cast<std::size_t>(d)];
      const auto& sample_e = plan.sample_welfare[static_cast<std::size_t>(d)];
      const std::int64_t N_d = prob.areas[static_cast<std::size_t>(d)].N_d;
      const auto n_sample = static_cast<std::int64_t>(sample_e.size());

      // Global unit order: sample records first, generated units after, so
      // selection can run against the stream of generated values.
      SeededStream sel_stream = root.derive(path::subsample, h, static_cast<std::uint64_t>(d));
      selected.clear();
      if (subsample_size == N_d) {
        selected.resize(static_cast<std::size_t>(N_d));
        for (std::int64_t j = 0; j < N_d; ++j) selected[static_cast<std::size_t>(j)] = j;
      } else {
        // Floyd's sampling without replacement, then sorted for streaming.
        std::set<std::int64_t> pool;
        for (std::int64_t j = N_d - subsample_size; j < N_d; ++j) {
          const auto t = static_cast<std::int64_t>(
              sel_stream.uniform_below(static_cast<std::uint64_t>(j + 1)));
          if (!pool.insert(t).second) pool.insert(j);
        }
        selected.assign(pool.begin(), pool.end());
      }

      std::fill(sample_sum.begin(), sample_sum.end(), 0.0);
      std::fill(gen_sum.begin(), gen_sum.end(), 0.0);
      std::size_t cursor = 0;
      while (cursor < selected.size() && selected[cursor] < n_sample) {
        const double e = sample_e[static_cast<std::size_t>(selected[cursor])];
        for (std::size_t s = 0; s < specs.size(); ++s)
          sample_sum[s] += fgt_contribution(e, specs[s].alpha, specs[s].z);
        ++cursor;
      }
      for (const auto& group : plan.groups) {
        SeededStream cstream = root.derive(path::census, h, static_cast<std::uint64_t>(d));
        std::int64_t index = n_sample;
        std::size_t cur = cursor;
        complete_area(std::span<const CensusRow>(cells), draw, d, group.transform, cstream,
                      [&](double e) {
                        if (cur < selected.size() && selected[cur] == index) {
                          for (std::size_t s : group.spec_indices)
                            gen_sum[s] += fgt_contribution(e, specs[s].alpha, specs[s].z);
                          ++cur;
                        }
                        ++index;
                      });
      }
      for (std::size_t s = 0; s < specs.size(); ++s)
        out.values[s][static_cast<std::size_t>(d) * static_cast<std::size_t>(H) + h] =
            (sample_sum[s] + gen_sum[s]) / static_cast<double>(subsample_size);
    }
  });
  return out;
}

}  // namespace saehb
