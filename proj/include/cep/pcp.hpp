#pragma once

#include <vector>

#include "cep/scores.hpp"
#include "cep/threshold.hpp"

namespace cep {

// Empirical quantile level k/n with k = ceil((1-alpha)(n+1)); level > 1
// means the quantile runs off the sample and the set is unbounded.
struct QuantileLevel {
  double level = 0.0;
};

QuantileLevel p_quantile_level(Eigen::Index n, double alpha);

// Split-conformal baseline cut: the k-th smallest calibration score with
// k = ceil((1-alpha)(n+1)), UNBOUNDED when k > n. Membership of a candidate
// score s is inclusive: s <= threshold.
Threshold p_conformal_threshold(const ScoreVector& calib, double alpha);

// Labels whose row score is at or below the baseline cut, ascending.
std::vector<int> p_conformal_set(const LabelScoreRow& row, const ScoreVector& calib, double alpha);

}  // namespace cep
