#include "cep/pcp.hpp"

#include <algorithm>
#include <vector>

#include "cep/detail/numeric.hpp"

namespace cep {

QuantileLevel p_quantile_level(Eigen::Index n, double alpha) {
  detail::require_alpha(alpha);
  detail::require(n >= 1, "quantile level needs at least one calibration score");
  auto k = detail::ceil_count((1.0 - alpha) * static_cast<double>(n + 1));
  return QuantileLevel{static_cast<double>(k) / static_cast<double>(n)};
}

Threshold p_conformal_threshold(const ScoreVector& calib, double alpha) {
  detail::require_alpha(alpha);
  detail::require(!calib.empty(), "the split baseline needs a nonempty calibration set");
  Eigen::Index n = calib.size();
  auto k = detail::ceil_count((1.0 - alpha) * static_cast<double>(n + 1));
  if (k > n) return Threshold::unbounded();
  // Selection, not a full sort: only the k-th smallest matters.
  std::vector<double> work(calib.values().data(), calib.values().data() + n);
  std::nth_element(work.begin(), work.begin() + (k - 1), work.end());
  return Threshold::finite(work[static_cast<std::size_t>(k - 1)]);
}

std::vector<int> p_conformal_set(const LabelScoreRow& row, const ScoreVector& calib, double alpha) {
  Threshold threshold = p_conformal_threshold(calib, alpha);
  std::vector<int> labels;
  for (Eigen::Index y = 0; y < row.num_labels(); ++y) {
    if (threshold.contains_inclusive(row.score(y))) labels.push_back(static_cast<int>(y));
  }
  return labels;
}

}  // namespace cep
