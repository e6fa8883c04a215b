#include "cep/core.hpp"

#include <cmath>
#include <string>

#include "cep/detail/numeric.hpp"

namespace cep {
namespace {

void check_test_score(double test_score) {
  detail::require(std::isfinite(test_score) && test_score > 0.0,
                  "test score must be a finite positive real, got " + std::to_string(test_score));
}

}  // namespace

EValue e_value(double test_score, const ScoreVector& calib) {
  check_test_score(test_score);
  if (calib.empty()) return EValue{1.0};
  double n_plus_1 = static_cast<double>(calib.size() + 1);
  return EValue{test_score * n_plus_1 / (calib.sum() + test_score)};
}

PValue p_value_rank(double test_score, const ScoreVector& calib) {
  check_test_score(test_score);
  Eigen::Index above = calib.empty() ? 0 : (calib.values() > test_score).count();
  return PValue{static_cast<double>(above + 1) / static_cast<double>(calib.size() + 1)};
}

EValue mean_e(std::span<const EValue> values) {
  detail::require(!values.empty(), "mean_e needs at least one e-value");
  double sum = 0.0;
  for (const EValue& e : values) {
    detail::require(std::isfinite(e.value) && e.value >= 0.0,
                    "e-values must be finite and nonnegative, got " + std::to_string(e.value));
    sum += e.value;
  }
  return EValue{sum / static_cast<double>(values.size())};
}

Threshold e_set_threshold(const ScoreVector& calib, double alpha) {
  detail::require_alpha(alpha);
  double n_plus_1 = static_cast<double>(calib.size() + 1);
  double k = n_plus_1 * alpha;
  // Below k = 1 even the supremum of the e-value stays under 1/alpha.
  if (detail::leq_snapped(k, 1.0)) return Threshold::unbounded();
  if (calib.empty()) return Threshold::empty();
  return Threshold::finite(calib.sum() / (k - 1.0));
}

std::vector<int> label_set_from_threshold(const LabelScoreRow& row, const Threshold& threshold) {
  std::vector<int> labels;
  for (Eigen::Index y = 0; y < row.num_labels(); ++y) {
    if (threshold.contains_strict(row.score(y))) labels.push_back(static_cast<int>(y));
  }
  return labels;
}

}  // namespace cep
