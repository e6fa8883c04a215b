#include "cep/scores.hpp"

#include <cmath>
#include <string>

#include "cep/detail/numeric.hpp"

namespace cep {
namespace {

void check_positive_finite(const Eigen::ArrayXd& values, const char* what) {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    double v = values(i);
    if (!std::isfinite(v) || v <= 0.0) {
      throw std::invalid_argument(std::string(what) + " at index " + std::to_string(i) +
                                  " must be a finite positive real, got " + std::to_string(v));
    }
  }
}

}  // namespace

ScoreVector::ScoreVector(Eigen::ArrayXd values) : values_(std::move(values)) {
  check_positive_finite(values_, "score");
}

LabelScoreRow::LabelScoreRow(Eigen::ArrayXd scores) : scores_(std::move(scores)) {
  detail::require(scores_.size() >= 1, "a label score row needs at least one label");
  check_positive_finite(scores_, "label score");
}

double cross_entropy_score(double prob) {
  detail::require(prob > 0.0 && prob <= 1.0, "probability must lie in (0, 1], got " + std::to_string(prob));
  return -std::log(prob);
}

double cross_entropy_score_guarded(double prob) { return cross_entropy_score(prob) + kPositivityGuard; }

double inverse_power_score(double prob, double exponent) {
  detail::require(prob > 0.0 && prob <= 1.0, "probability must lie in (0, 1], got " + std::to_string(prob));
  detail::require(exponent > 0.0, "exponent must be positive, got " + std::to_string(exponent));
  return std::pow(prob, -exponent);
}

double positive_orientation(double value, double epsilon) {
  detail::require(epsilon > 0.0, "epsilon must be positive, got " + std::to_string(epsilon));
  detail::require(value >= 0.0 && std::isfinite(value),
                  "positively oriented value must be finite and nonnegative, got " + std::to_string(value));
  return 1.0 / (value + epsilon);
}

ScoreVector validate_scores(std::span<const double> raw) {
  Eigen::ArrayXd values(static_cast<Eigen::Index>(raw.size()));
  for (std::size_t i = 0; i < raw.size(); ++i) values(static_cast<Eigen::Index>(i)) = raw[i];
  return ScoreVector(std::move(values));
}

}  // namespace cep
