#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace saehb {

// Input rejected at validation time: improper posterior, inconsistent sizes,
// or domain violations.  `kind` is a stable machine-readable label.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct SurveyRecord {
  int area = 0;               // caller-facing area label
  double welfare = 0.0;       // E_di on the original scale
  double het_weight = 1.0;    // w_di > 0, unit-level precision multiplier
  double survey_weight = 1.0; // design weight, carried through to outputs
  Eigen::VectorXd x;          // covariate row, length p
};

struct SurveySample {
  std::vector<SurveyRecord> records;
  int p = 0;  // covariate count including any intercept column
};

// One census cell: `count` out-of-sample units sharing covariates and weight.
struct CensusRow {
  int area = 0;
  double het_weight = 1.0;
  std::int64_t count = 0;
  Eigen::VectorXd x;
};

struct CensusFrame {
  std::vector<CensusRow> rows;
  // Optional population sizes keyed by area label.  Cross-checked against
  // n_d + sum of cell counts when present; derived from them when empty.
  std::vector<std::pair<int, std::int64_t>> area_sizes;
};

// Monotone welfare-to-model-scale map: identity or Y = log(E + shift).
struct TransformSpec {
  enum class Kind { identity, log_shift };
  Kind kind = Kind::identity;
  double shift = 0.0;

  static TransformSpec identity() { return TransformSpec{Kind::identity, 0.0}; }
  static TransformSpec log_shift(double c) { return TransformSpec{Kind::log_shift, c}; }
};

inline double apply_transform(double welfare, const TransformSpec& t) {
  if (t.kind == TransformSpec::Kind::identity) return welfare;
  const double shifted = welfare + t.shift;
  if (!(shifted > 0.0))
    throw ValidationError("nonpositive_shifted_welfare",
                          "welfare + shift must be positive for the log transform (got " +
                              std::to_string(shifted) + ")");
  return std::log(shifted);
}

inline double invert_transform(double y, const TransformSpec& t) {
  return t.kind == TransformSpec::Kind::identity ? y : std::exp(y) - t.shift;
}

}  // namespace saehb
