#pragma once

#include <Eigen/Core>

#include <vector>

#include "cep/core.hpp"
#include "cep/scores.hpp"
#include "cep/threshold.hpp"

namespace cep {

// Calibration scores under ambiguous ground truth: column j holds the
// scores induced by expert j's labels for the same n calibration examples.
// Entries are finite and strictly positive; m >= 1 experts; n may be 0
// (no calibration data, every column degenerate). Column sums are cached
// because per-candidate e-values touch only them.
class ExpertScoreMatrix {
 public:
  explicit ExpertScoreMatrix(Eigen::ArrayXXd scores);

  const Eigen::ArrayXXd& scores() const { return scores_; }
  Eigen::Index num_examples() const { return scores_.rows(); }
  Eigen::Index num_experts() const { return scores_.cols(); }
  const Eigen::ArrayXd& column_sums() const { return column_sums_; }

  // First k columns as a new matrix, for expert-count ablations.
  ExpertScoreMatrix restricted_to_experts(Eigen::Index k) const;

 private:
  Eigen::ArrayXXd scores_;
  Eigen::ArrayXd column_sums_;
};

// Pooled-rank cut: the k-th smallest of all m*n scores where
// k = ceil(level * m * n) and level = (ceil(m(1-alpha)(n+1)) - 1) / (m*n).
// UNBOUNDED when level >= 1, EMPTY when k = 0. Membership of a candidate
// score s is inclusive: s <= threshold.
Threshold mc_p_threshold(const ExpertScoreMatrix& matrix, double alpha);

// Labels whose row score is at or below the pooled cut, ascending.
std::vector<int> mc_p_set(const ExpertScoreMatrix& matrix, const LabelScoreRow& row, double alpha);

// Mean over experts of the per-column e-value at test_score:
//   (1/m) * sum_j test_score * (n+1) / (col_sum_j + test_score).
// Strictly increasing in test_score with supremum n + 1.
EValue mc_e_value(const ExpertScoreMatrix& matrix, double test_score);

// Score cut where mc_e_value reaches 1/alpha, found by bisection (relative
// tolerance 1e-9, at most 200 iterations). UNBOUNDED when the supremum
// n + 1 never reaches 1/alpha. Membership is strict: s < threshold.
Threshold mc_e_threshold(const ExpertScoreMatrix& matrix, double alpha);

// Labels whose averaged e-value stays below 1/alpha, ascending. Evaluates
// mc_e_value directly rather than comparing against the bisected cut.
std::vector<int> mc_e_set(const ExpertScoreMatrix& matrix, const LabelScoreRow& row, double alpha);

}  // namespace cep
