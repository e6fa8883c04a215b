#pragma once

#include <Eigen/Core>

#include <span>

namespace cep {

// Nonconformity scores, validated at construction: every entry is finite and
// strictly positive. Larger means less conforming. An empty vector is legal
// (no calibration data yet).
class ScoreVector {
 public:
  ScoreVector() = default;
  explicit ScoreVector(Eigen::ArrayXd values);

  const Eigen::ArrayXd& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  bool empty() const { return values_.size() == 0; }
  double sum() const { return values_.size() == 0 ? 0.0 : values_.sum(); }

 private:
  Eigen::ArrayXd values_;
};

// One candidate score per label for a single feature vector; entry y is the
// score the calibration scheme would assign if the label were y. At least
// one label; entries finite and strictly positive.
class LabelScoreRow {
 public:
  explicit LabelScoreRow(Eigen::ArrayXd scores);

  const Eigen::ArrayXd& scores() const { return scores_; }
  Eigen::Index num_labels() const { return scores_.size(); }
  double score(Eigen::Index label) const { return scores_(label); }

 private:
  Eigen::ArrayXd scores_;
};

inline constexpr double kPositivityGuard = 1e-12;
inline constexpr double kDefaultOrientationEpsilon = 1e-6;

// -log(prob). Zero exactly when prob == 1, which downstream e-value
// machinery cannot accept; use the guarded variant there.
double cross_entropy_score(double prob);

// -log(prob) + kPositivityGuard, strictly positive on (0, 1].
double cross_entropy_score_guarded(double prob);

// prob^(-exponent). Amplifies low-confidence predictions.
double inverse_power_score(double prob, double exponent = 0.25);

// Maps a larger-is-better statistic to a strictly positive
// smaller-is-better score: 1 / (value + epsilon).
double positive_orientation(double value, double epsilon = kDefaultOrientationEpsilon);

// Checks every entry is finite and strictly positive; the error message
// names the first offending index.
ScoreVector validate_scores(std::span<const double> raw);

}  // namespace cep
