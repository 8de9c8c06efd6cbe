// Command-line front end: estimation, diagnostics, shift selection, and the
// simulation study, over CSV inputs and outputs.
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "saehb/saehb.hpp"

namespace {

using namespace saehb;

std::vector<double> parse_double_list(const std::string& text, const std::string& context) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(parse_double(item, context));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw SchemaError(context + ": empty list");
  return out;
}

std::string indicator_name(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "F%g", alpha);
  return buf;
}

std::string cell_or_na(double v) {
  return std::isfinite(v) ? format_double(v) : "NA";
}

// Column layout of an input table: fixed named columns plus x1..xp.
struct ColumnMap {
  std::map<std::string, int> named;
  std::vector<int> x;  // x[k] is the column of covariate k+1
};

ColumnMap map_columns(const CsvTable& table, const std::string& path,
                      const std::vector<std::string>& required,
                      const std::vector<std::string>& optional) {
  ColumnMap cm;
  std::set<std::string> seen;
  std::map<int, int> x_cols;  // covariate number -> column index
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    const std::string& name = table.header[j];
    if (!seen.insert(name).second) throw SchemaError(path + ": duplicate column '" + name + "'");
    const bool known = std::find(required.begin(), required.end(), name) != required.end() ||
                       std::find(optional.begin(), optional.end(), name) != optional.end();
    if (known) {
      cm.named[name] = static_cast<int>(j);
      continue;
    }
    if (name.size() >= 2 && name[0] == 'x' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos) {
      x_cols[static_cast<int>(parse_integer(name.substr(1), path))] = static_cast<int>(j);
      continue;
    }
    throw SchemaError(path + ": unknown column '" + name + "'");
  }
  for (const auto& name : required)
    if (!cm.named.count(name)) throw SchemaError(path + ": missing column '" + name + "'");
  for (const auto& [k, col] : x_cols) {
    if (k != static_cast<int>(cm.x.size()) + 1)
      throw SchemaError(path + ": covariate columns must be named x1..xp consecutively");
    cm.x.push_back(col);
  }
  return cm;
}

Eigen::VectorXd design_row(const std::vector<std::string>& row, const ColumnMap& cm,
                           bool no_intercept, const std::string& context) {
  const int p_x = static_cast<int>(cm.x.size());
  Eigen::VectorXd x(no_intercept ? p_x : p_x + 1);
  int at = 0;
  if (!no_intercept) x[at++] = 1.0;
  for (int k = 0; k < p_x; ++k)
    x[at++] = parse_double(row[static_cast<std::size_t>(cm.x[static_cast<std::size_t>(k)])], context);
  return x;
}

struct LoadedData {
  SurveySample sample;
  CensusFrame census;
  std::vector<double> welfare;  // sample welfare, input order
};

LoadedData load_inputs(const std::string& sample_path, const std::string& census_path,
                       bool no_intercept) {
  LoadedData data;

  const CsvTable st = read_csv(sample_path);
  const ColumnMap sc = map_columns(st, sample_path, {"area", "welfare", "het_weight"},
                                   {"survey_weight"});
  if (no_intercept && sc.x.empty())
    throw SchemaError(sample_path + ": no covariate columns and no intercept requested");
  data.sample.p = static_cast<int>(sc.x.size()) + (no_intercept ? 0 : 1);
  for (std::size_t i = 0; i < st.rows.size(); ++i) {
    const auto& row = st.rows[i];
    const std::string context = sample_path + " row " + std::to_string(i + 2);
    SurveyRecord r;
    r.area = static_cast<int>(
        parse_integer(row[static_cast<std::size_t>(sc.named.at("area"))], context));
    r.welfare = parse_double(row[static_cast<std::size_t>(sc.named.at("welfare"))], context);
    r.het_weight = parse_double(row[static_cast<std::size_t>(sc.named.at("het_weight"))], context);
    if (auto it = sc.named.find("survey_weight"); it != sc.named.end())
      r.survey_weight = parse_double(row[static_cast<std::size_t>(it->second)], context);
    r.x = design_row(row, sc, no_intercept, context);
    data.welfare.push_back(r.welfare);
    data.sample.records.push_back(std::move(r));
  }

  const CsvTable ct = read_csv(census_path);
  const ColumnMap cc = map_columns(ct, census_path, {"area", "count"}, {"het_weight"});
  if (cc.x.size() != sc.x.size())
    throw SchemaError(census_path + ": expected " + std::to_string(sc.x.size()) +
                      " covariate columns to match " + sample_path + ", found " +
                      std::to_string(cc.x.size()));
  for (std::size_t i = 0; i < ct.rows.size(); ++i) {
    const auto& row = ct.rows[i];
    const std::string context = census_path + " row " + std::to_string(i + 2);
    CensusRow c;
    c.area = static_cast<int>(
        parse_integer(row[static_cast<std::size_t>(cc.named.at("area"))], context));
    c.count = parse_integer(row[static_cast<std::size_t>(cc.named.at("count"))], context);
    if (auto it = cc.named.find("het_weight"); it != cc.named.end())
      c.het_weight = parse_double(row[static_cast<std::size_t>(it->second)], context);
    else
      c.het_weight = 1.0;
    c.x = design_row(row, cc, no_intercept, context);
    data.census.rows.push_back(std::move(c));
  }
  return data;
}

// The CLI requires census rows for every sampled area: a missing area almost
// always means inconsistent files, not a deliberate sampling fraction of one.
void require_census_coverage(const LoadedData& data) {
  std::set<int> census_areas;
  for (const auto& c : data.census.rows) census_areas.insert(c.area);
  for (const auto& r : data.sample.records)
    if (!census_areas.count(r.area))
      throw ValidationError("census_missing_area",
                            "census has no rows for area " + std::to_string(r.area) +
                                " present in the sample");
}

std::vector<double> default_shift_candidates(std::span<const double> welfare) {
  const auto [lo_it, hi_it] = std::minmax_element(welfare.begin(), welfare.end());
  const double lo = *lo_it, hi = *hi_it;
  double range = hi - lo;
  if (!(range > 0.0)) range = std::abs(hi) > 0.0 ? std::abs(hi) : 1.0;
  const double base = lo > 0.0 ? 0.0 : -lo + 1e-6 * range;
  std::vector<double> c(21);
  for (int j = 0; j <= 20; ++j)
    c[static_cast<std::size_t>(j)] = base + range * static_cast<double>(j) / 20.0;
  return c;
}

struct Settings {
  std::string sample_path, census_path, out_dir = ".";
  std::string transform_text = "identity";
  std::string alphas_text = "0,1";
  std::string shift_candidates_text;
  std::uint64_t seed = 0x5AEB;
  unsigned threads = 0;
  int H = 1000;
  int R = 1000;
  double epsilon = 1e-4;
  double level = 0.95;
  double z = 12.0;
  double cpo_low = 0.025;
  double cpo_extreme = 0.014;
  bool no_intercept = false;
  bool emit_draws = false;
  bool fast_hb = false;
  std::int64_t subsample = 0;
};

void check_common(const Settings& s) {
  if (!(s.level > 0.0) || !(s.level < 1.0)) throw SchemaError("level must lie in (0, 1)");
  if (!(s.epsilon > 0.0) || !(s.epsilon < 0.5)) throw SchemaError("epsilon must lie in (0, 0.5)");
  if (s.R < 10) throw SchemaError("rho-grid must be at least 10");
  if (s.H < static_cast<int>(std::ceil(2.0 / (1.0 - s.level))))
    throw SchemaError("draws too small for the requested level");
  if (!(s.z > 0.0)) throw SchemaError("poverty line must be positive");
  if (s.fast_hb && s.subsample < 1)
    throw SchemaError("--fast-hb requires --subsample-size of at least 1");
}

void require_files(const Settings& s) {
  if (s.sample_path.empty()) throw SchemaError("missing --sample");
  if (s.census_path.empty()) throw SchemaError("missing --census");
}

std::vector<double> parse_alphas(const Settings& s) {
  auto alphas = parse_double_list(s.alphas_text, "--alphas");
  for (double a : alphas)
    if (!(a >= 0.0)) throw SchemaError("--alphas: FGT orders must be nonnegative");
  return alphas;
}

TransformSpec resolve_transform(const Settings& s, const LoadedData& data, double* auto_shift) {
  if (s.transform_text == "identity") return TransformSpec::identity();
  const std::string prefix = "logshift:";
  if (s.transform_text.rfind(prefix, 0) == 0) {
    const std::string arg = s.transform_text.substr(prefix.size());
    if (arg == "auto") {
      const std::vector<double> candidates =
          s.shift_candidates_text.empty()
              ? default_shift_candidates(data.welfare)
              : parse_double_list(s.shift_candidates_text, "--shift-candidates");
      const ShiftSelection sel =
          select_shift(data.sample, data.census, candidates, s.R, s.epsilon);
      if (auto_shift) *auto_shift = sel.c;
      std::cout << "selected shift c = " << format_double(sel.c)
                << " (residual skewness " << format_double(sel.skewness) << ")\n";
      return TransformSpec::log_shift(sel.c);
    }
    return TransformSpec::log_shift(parse_double(arg, "--transform"));
  }
  throw SchemaError("unknown transform '" + s.transform_text +
                    "' (expected identity, logshift:<c>, or logshift:auto)");
}

std::filesystem::path output_path(const Settings& s, const std::string& name) {
  std::filesystem::create_directories(s.out_dir);
  return std::filesystem::path(s.out_dir) / name;
}

int cmd_estimate(const Settings& s) {
  check_common(s);
  require_files(s);
  const auto alphas = parse_alphas(s);
  const LoadedData data = load_inputs(s.sample_path, s.census_path, s.no_intercept);
  require_census_coverage(data);
  const TransformSpec transform = resolve_transform(s, data, nullptr);

  const ValidatedProblem prob = validate_problem(data.sample, data.census, transform);
  const RhoGrid grid = build_rho_grid(prob, s.R, s.epsilon);
  std::vector<IndicatorSpec> specs;
  for (double a : alphas) specs.push_back(IndicatorSpec::fgt(a, s.z, transform));

  const SeededStream root(s.seed);
  const IndicatorDraws draws =
      s.fast_hb ? fast_hb_draws(prob, grid, specs, s.H, s.subsample, root, s.threads)
                : hb_draws(prob, grid, specs, s.H, root, s.threads);

  const auto summaries_path = output_path(s, "summaries.csv");
  CsvWriter summaries(summaries_path.string());
  summaries.row({"area", "indicator", "mean", "variance", "sd", "cv_percent", "et_lo", "et_hi",
                 "hpd_lo", "hpd_hi", "n_d", "N_d"});
  for (int d = 0; d < prob.D; ++d) {
    const auto& area = prob.areas[static_cast<std::size_t>(d)];
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const PosteriorSummary ps = summarize(draws.area_draws(a, d), s.level);
      summaries.row({std::to_string(area.label), indicator_name(alphas[a]),
                     format_double(ps.mean), format_double(ps.variance), format_double(ps.sd),
                     ps.cv_defined ? format_double(100.0 * ps.cv) : "NA",
                     format_double(ps.et_lo), format_double(ps.et_hi), format_double(ps.hpd_lo),
                     format_double(ps.hpd_hi), std::to_string(area.n_d),
                     std::to_string(area.N_d)});
    }
  }

  if (s.emit_draws) {
    const auto draws_path = output_path(s, "draws.csv");
    CsvWriter out(draws_path.string());
    out.row({"area", "indicator", "h", "value"});
    for (int d = 0; d < prob.D; ++d) {
      const auto& area = prob.areas[static_cast<std::size_t>(d)];
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        const auto v = draws.area_draws(a, d);
        for (int h = 0; h < s.H; ++h)
          out.row({std::to_string(area.label), indicator_name(alphas[a]), std::to_string(h + 1),
                   format_double(v[static_cast<std::size_t>(h)])});
      }
    }
    std::cout << "wrote " << draws_path.string() << "\n";
  }

  std::cout << "areas " << prob.D << " (" << prob.D_star << " sampled), units " << prob.n
            << ", design columns " << prob.p << ", grid points " << grid.points.size()
            << ", draws " << s.H << (s.fast_hb ? " (design-based subsampling)" : "") << "\n"
            << "wrote " << summaries_path.string() << "\n";
  return 0;
}

int cmd_diagnose(const Settings& s) {
  check_common(s);
  require_files(s);
  const LoadedData data = load_inputs(s.sample_path, s.census_path, s.no_intercept);
  require_census_coverage(data);
  const TransformSpec transform = resolve_transform(s, data, nullptr);

  const ValidatedProblem prob = validate_problem(data.sample, data.census, transform);
  const RhoGrid grid = build_rho_grid(prob, s.R, s.epsilon);
  const auto draws = draw_parameters(prob, grid, s.H, SeededStream(s.seed), s.threads);
  const auto units = unit_diagnostics(prob, draws, s.threads);

  const auto path = output_path(s, "diagnostics.csv");
  CsvWriter out(path.string());
  out.row({"area", "unit", "y", "deleted_mean", "deleted_var", "r_di", "cpo", "survey_weight",
           "flags"});
  long flagged = 0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    std::string flags;
    auto add_flag = [&](const char* f) {
      if (!flags.empty()) flags += ';';
      flags += f;
    };
    if (u.cpo < s.cpo_low) add_flag("low_cpo");
    if (u.cpo < s.cpo_extreme) add_flag("extreme");
    if (u.var_clamped) add_flag("var_clamped");
    if (u.weight_underflow) add_flag("weight_underflow");
    if (!flags.empty()) ++flagged;
    out.row({std::to_string(prob.areas[static_cast<std::size_t>(u.dense_area)].label),
             std::to_string(u.unit), format_double(u.y), format_double(u.deleted_mean),
             format_double(u.deleted_var), format_double(u.residual), format_double(u.cpo),
             format_double(prob.record_survey_weight[static_cast<long>(i)]), flags});
  }
  std::cout << "units " << units.size() << ", flagged " << flagged << "\n"
            << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_select_shift(const Settings& s) {
  check_common(s);
  require_files(s);
  const LoadedData data = load_inputs(s.sample_path, s.census_path, s.no_intercept);
  require_census_coverage(data);
  const std::vector<double> candidates =
      s.shift_candidates_text.empty()
          ? default_shift_candidates(data.welfare)
          : parse_double_list(s.shift_candidates_text, "--shift-candidates");
  const ShiftSelection sel = select_shift(data.sample, data.census, candidates, s.R, s.epsilon);

  const auto path = output_path(s, "shift_curve.csv");
  CsvWriter out(path.string());
  out.row({"c", "skewness"});
  for (const auto& cand : sel.curve)
    out.row({format_double(cand.c), format_double(cand.skewness)});

  std::cout << "selected_shift=" << format_double(sel.c) << "\n"
            << "skewness_at_selected=" << format_double(sel.skewness) << "\n"
            << "wrote " << path.string() << "\n";
  return 0;
}

struct SimulateOverrides {
  CLI::Option *H = nullptr, *R = nullptr, *epsilon = nullptr, *level = nullptr, *z = nullptr,
              *alphas = nullptr;
  CLI::Option *areas = nullptr, *population = nullptr, *sample_size = nullptr,
              *sample_sizes = nullptr, *replicates = nullptr, *sigma2 = nullptr, *rho = nullptr,
              *beta = nullptr;
  int areas_v = 80;
  std::int64_t population_v = 250;
  long sample_size_v = 50;
  std::string sample_sizes_text;
  int replicates_v = 200;
  double sigma2_v = 0.25;
  double rho_v = 0.0225 / 0.2725;
  std::string beta_text;
  bool no_covariates = false;
  std::string preset = "default";
};

SimConfig preset_config(const std::string& name) {
  SimConfig cfg;  // defaults are the scaled simulation study
  if (name == "default") return cfg;
  if (name == "cv-curve") {
    cfg.use_covariates = false;
    cfg.beta = Eigen::VectorXd::Constant(1, 3.0);
    for (long n : {20L, 30L, 40L, 50L})
      cfg.sample_sizes.insert(cfg.sample_sizes.end(), 20, n);
    return cfg;
  }
  if (name == "smoke") {
    cfg.D = 10;
    cfg.N_d_default = 40;
    cfg.n_d_default = 10;
    cfg.replicates = 1;
    cfg.H = 100;
    cfg.R = 100;
    return cfg;
  }
  throw SchemaError("unknown preset '" + name +
                    "' (expected default, cv-curve, or smoke)");
}

int cmd_simulate(const Settings& s, const SimulateOverrides& ov) {
  SimConfig cfg = preset_config(ov.preset);
  cfg.seed = s.seed;
  cfg.threads = s.threads;
  if (ov.H->count()) cfg.H = s.H;
  if (ov.R->count()) cfg.R = s.R;
  if (ov.epsilon->count()) cfg.epsilon = s.epsilon;
  if (ov.level->count()) cfg.level = s.level;
  if (ov.z->count()) cfg.z = s.z;
  if (ov.alphas->count()) cfg.alphas = parse_double_list(s.alphas_text, "--alphas");
  if (ov.areas->count()) cfg.D = ov.areas_v;
  if (ov.population->count()) {
    cfg.area_sizes.clear();
    cfg.N_d_default = ov.population_v;
  }
  if (ov.sample_size->count()) {
    cfg.sample_sizes.clear();
    cfg.n_d_default = ov.sample_size_v;
  }
  if (ov.sample_sizes->count()) {
    cfg.sample_sizes.clear();
    for (double v : parse_double_list(ov.sample_sizes_text, "--sample-sizes"))
      cfg.sample_sizes.push_back(static_cast<long>(v));
  }
  if (ov.replicates->count()) cfg.replicates = ov.replicates_v;
  if (ov.sigma2->count()) cfg.sigma2 = ov.sigma2_v;
  if (ov.rho->count()) cfg.rho = ov.rho_v;
  if (ov.no_covariates) {
    cfg.use_covariates = false;
    cfg.beta = Eigen::VectorXd::Constant(1, 3.0);
  }
  if (ov.beta->count()) {
    const auto b = parse_double_list(ov.beta_text, "--beta");
    cfg.beta = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  }
  if (cfg.replicates < 1) throw SchemaError("--replicates must be at least 1");
  if (cfg.D < 1) throw SchemaError("--areas must be at least 1");
  if (cfg.beta.size() != cfg.p())
    throw SchemaError("--beta length must match the covariate layout (" +
                      std::to_string(cfg.p()) + " coefficients)");

  const StudyMetrics metrics = run_study(cfg);

  const auto path = output_path(s, "metrics.csv");
  CsvWriter out(path.string());
  out.row({"area", "n_d", "mc_mean_hb", "mc_mean_true", "mse", "cov_et_pct", "cov_hpd_pct",
           "width_et", "width_hpd", "mean_cv_pct", "mean_cv_direct_pct", "indicator"});
  for (std::size_t a = 0; a < metrics.alphas.size(); ++a) {
    for (const auto& am : metrics.per_area[a]) {
      out.row({std::to_string(am.area_label), std::to_string(am.n_d),
               format_double(am.mc_mean_hb), format_double(am.mc_mean_true),
               format_double(am.mse), format_double(am.cov_et_pct),
               format_double(am.cov_hpd_pct), format_double(am.width_et),
               format_double(am.width_hpd), cell_or_na(am.mean_cv_pct),
               cell_or_na(am.mean_cv_direct_pct), indicator_name(metrics.alphas[a])});
    }
  }

  const auto pct = [](double v) {
    char buf[32];
    if (std::isfinite(v))
      std::snprintf(buf, sizeof(buf), "%.2f%%", v);
    else
      std::snprintf(buf, sizeof(buf), "NA");
    return std::string(buf);
  };
  for (std::size_t a = 0; a < metrics.alphas.size(); ++a) {
    const auto& pm = metrics.pooled[a];
    std::printf("%s: coverage et %s hpd %s, width et %.4f hpd %.4f, cv %s, direct cv %s\n",
                indicator_name(metrics.alphas[a]).c_str(), pct(pm.cov_et_pct).c_str(),
                pct(pm.cov_hpd_pct).c_str(), pm.width_et, pm.width_hpd,
                pct(pm.mean_cv_pct).c_str(), pct(pm.mean_cv_direct_pct).c_str());
  }
  std::printf("replicates %d, wall %.1fs\n", metrics.replicates, metrics.wall_seconds);
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical Bayes small-area estimation of FGT poverty indicators"};
  app.set_config("--config", "", "flat key=value configuration file (flags win)");
  app.require_subcommand(1);

  Settings s;
  SimulateOverrides ov;

  app.add_option("--sample", s.sample_path, "survey sample CSV (area,welfare,het_weight[,survey_weight],x1..xp)");
  app.add_option("--census", s.census_path, "out-of-sample census CSV (area[,het_weight],count,x1..xp)");
  app.add_option("--out-dir", s.out_dir, "output directory")->capture_default_str();
  app.add_option("--transform", s.transform_text,
                 "welfare transform: identity | logshift:<c> | logshift:auto")
      ->capture_default_str();
  ov.alphas = app.add_option("--alphas", s.alphas_text, "comma-separated FGT orders")
                  ->capture_default_str();
  app.add_option("--shift-candidates", s.shift_candidates_text,
                 "comma-separated shift candidates for logshift:auto");
  app.add_option("--seed", s.seed, "root seed for all randomness")
      ->envname("SAEHB_SEED")
      ->capture_default_str();
  app.add_option("--threads", s.threads, "worker threads (0 = all cores)")->capture_default_str();
  ov.H = app.add_option("--draws", s.H, "posterior draws H")->capture_default_str();
  ov.R = app.add_option("--rho-grid", s.R, "correlation grid resolution R")->capture_default_str();
  ov.epsilon = app.add_option("--epsilon", s.epsilon, "truncation of the correlation support")
                   ->capture_default_str();
  ov.level = app.add_option("--level", s.level, "credible level")->capture_default_str();
  ov.z = app.add_option("--poverty-line", s.z, "poverty line z in welfare units")
             ->capture_default_str();
  app.add_option("--cpo-low", s.cpo_low, "low-CPO flag threshold")->capture_default_str();
  app.add_option("--cpo-extreme", s.cpo_extreme, "extreme-CPO flag threshold")
      ->capture_default_str();
  app.add_flag("--no-intercept", s.no_intercept, "do not prepend an intercept column");
  app.add_flag("--emit-draws", s.emit_draws, "also write the per-draw indicator values");
  app.add_flag("--fast-hb", s.fast_hb, "design-based subsampling of each completed census");
  app.add_option("--subsample-size", s.subsample, "units per area drawn under --fast-hb");

  ov.areas = app.add_option("--areas", ov.areas_v, "simulate: number of areas D")
                 ->capture_default_str();
  ov.population = app.add_option("--population-size", ov.population_v, "simulate: N_d per area")
                      ->capture_default_str();
  ov.sample_size = app.add_option("--sample-size", ov.sample_size_v, "simulate: n_d per area")
                       ->capture_default_str();
  ov.sample_sizes = app.add_option("--sample-sizes", ov.sample_sizes_text,
                                   "simulate: comma-separated n_d schedule, one per area");
  ov.replicates = app.add_option("--replicates", ov.replicates_v, "simulate: Monte Carlo replicates I")
                      ->capture_default_str();
  ov.sigma2 = app.add_option("--sigma2", ov.sigma2_v, "simulate: error variance")
                  ->capture_default_str();
  ov.rho = app.add_option("--rho", ov.rho_v, "simulate: intra-area correlation")
               ->capture_default_str();
  ov.beta = app.add_option("--beta", ov.beta_text, "simulate: comma-separated coefficients");
  app.add_flag("--no-covariates", ov.no_covariates, "simulate: intercept-only population");
  app.add_option("--preset", ov.preset,
                 "simulate: default | cv-curve | smoke")
      ->capture_default_str();

  auto* est = app.add_subcommand("estimate", "fit the model and write posterior summaries");
  auto* sim = app.add_subcommand("simulate", "run a model-based simulation study and write metrics");
  auto* diag = app.add_subcommand("diagnose", "write cross-validation residuals and CPOs");
  auto* shift = app.add_subcommand("select-shift", "sweep shift candidates by residual skewness");
  for (auto* sub : {est, sim, diag, shift}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (est->parsed()) return cmd_estimate(s);
    if (sim->parsed()) return cmd_simulate(s, ov);
    if (diag->parsed()) return cmd_diagnose(s);
    if (shift->parsed()) return cmd_select_shift(s);
    throw SchemaError("no command given");
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const GridPointError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
