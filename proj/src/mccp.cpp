#include "cep/mccp.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cep/detail/numeric.hpp"

namespace cep {
namespace {

void check_test_score(double test_score) {
  detail::require(std::isfinite(test_score) && test_score > 0.0,
                  "test score must be a finite positive real, got " + std::to_string(test_score));
}

}  // namespace

ExpertScoreMatrix::ExpertScoreMatrix(Eigen::ArrayXXd scores) : scores_(std::move(scores)) {
  detail::require(scores_.cols() >= 1, "expert score matrix needs at least one expert column");
  for (Eigen::Index j = 0; j < scores_.cols(); ++j) {
    for (Eigen::Index i = 0; i < scores_.rows(); ++i) {
      double v = scores_(i, j);
      if (!std::isfinite(v) || v <= 0.0) {
        throw std::invalid_argument("expert score at row " + std::to_string(i) + ", column " +
                                    std::to_string(j) + " must be a finite positive real, got " +
                                    std::to_string(v));
      }
    }
  }
  if (scores_.rows() == 0)
    column_sums_ = Eigen::ArrayXd::Zero(scores_.cols());
  else
    column_sums_ = scores_.colwise().sum().transpose();
}

ExpertScoreMatrix ExpertScoreMatrix::restricted_to_experts(Eigen::Index k) const {
  detail::require(k >= 1 && k <= scores_.cols(),
                  "expert restriction must keep between 1 and m columns, got " + std::to_string(k));
  return ExpertScoreMatrix(scores_.leftCols(k));
}

Threshold mc_p_threshold(const ExpertScoreMatrix& matrix, double alpha) {
  detail::require_alpha(alpha);
  Eigen::Index n = matrix.num_examples();
  Eigen::Index m = matrix.num_experts();
  detail::require(n >= 1, "the pooled-rank cut needs at least one calibration example");
  // level = (ceil(m(1-alpha)(n+1)) - 1) / (m*n); the pooled order-statistic
  // index ceil(level*m*n) equals the integer numerator exactly.
  auto k = detail::ceil_count(static_cast<double>(m) * (1.0 - alpha) * static_cast<double>(n + 1)) - 1;
  auto pool_size = static_cast<std::int64_t>(m) * static_cast<std::int64_t>(n);
  if (k >= pool_size) return Threshold::unbounded();
  if (k <= 0) return Threshold::empty();
  std::vector<double> work(matrix.scores().data(), matrix.scores().data() + pool_size);
  std::nth_element(work.begin(), work.begin() + (k - 1), work.end());
  return Threshold::finite(work[static_cast<std::size_t>(k - 1)]);
}

std::vector<int> mc_p_set(const ExpertScoreMatrix& matrix, const LabelScoreRow& row, double alpha) {
  Threshold threshold = mc_p_threshold(matrix, alpha);
  std::vector<int> labels;
  for (Eigen::Index y = 0; y < row.num_labels(); ++y) {
    if (threshold.contains_inclusive(row.score(y))) labels.push_back(static_cast<int>(y));
  }
  return labels;
}

EValue mc_e_value(const ExpertScoreMatrix& matrix, double test_score) {
  check_test_score(test_score);
  double n_plus_1 = static_cast<double>(matrix.num_examples() + 1);
  return EValue{(test_score * n_plus_1 / (matrix.column_sums() + test_score)).mean()};
}

Threshold mc_e_threshold(const ExpertScoreMatrix& matrix, double alpha) {
  detail::require_alpha(alpha);
  double n_plus_1 = static_cast<double>(matrix.num_examples() + 1);
  // The averaged e-value increases strictly from 0 toward n+1, so a finite
  // cut exists exactly when n+1 exceeds 1/alpha.
  if (detail::leq_snapped(n_plus_1 * alpha, 1.0)) return Threshold::unbounded();
  double target = 1.0 / alpha;

  double lo = 0.0;
  double hi = std::max(1.0, matrix.num_examples() > 0 ? matrix.column_sums().maxCoeff() : 1.0);
  while (mc_e_value(matrix, hi).value < target) hi *= 2.0;

  for (int iter = 0; iter < 200 && (hi - lo) > 1e-9 * std::max(1.0, hi); ++iter) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (mc_e_value(matrix, mid).value < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return Threshold::finite(0.5 * (lo + hi));
}

std::vector<int> mc_e_set(const ExpertScoreMatrix& matrix, const LabelScoreRow& row, double alpha) {
  detail::require_alpha(alpha);
  double target = 1.0 / alpha;
  std::vector<int> labels;
  for (Eigen::Index y = 0; y < row.num_labels(); ++y) {
    if (mc_e_value(matrix, row.score(y)).value < target) labels.push_back(static_cast<int>(y));
  }
  return labels;
}

}  // namespace cep
