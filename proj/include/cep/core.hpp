#pragma once

#include <span>
#include <vector>

#include "cep/scores.hpp"
#include "cep/threshold.hpp"

namespace cep {

// Nonnegative betting outcome; averages to 1 over exchangeable data.
struct EValue {
  double value = 1.0;
};

// Conservative p-variable from ranks; takes values in {1/(n+1), ..., 1}.
struct PValue {
  double value = 1.0;
};

// test_score scaled by the mean of the augmented bag {calib..., test_score}:
//   e = test_score * (n + 1) / (sum(calib) + test_score).
// Empty calibration gives 1 (the only exchangeable answer with no data).
EValue e_value(double test_score, const ScoreVector& calib);

// (#{calib_i >= ... strictly greater} + 1) adjusted rank:
//   p = (#{calib_i > test_score} + 1) / (n + 1).
PValue p_value_rank(double test_score, const ScoreVector& calib);

// Arithmetic mean; an average of e-values is again an e-value.
EValue mean_e(std::span<const EValue> values);

// Largest score cut such that every s below it keeps e_value(s, calib)
// under 1/alpha. UNBOUNDED when (n+1)*alpha <= 1 (no score can be
// excluded); otherwise sum(calib) / ((n+1)*alpha - 1). Membership of a
// candidate score s is exactly s < threshold.
Threshold e_set_threshold(const ScoreVector& calib, double alpha);

// Labels whose row score falls strictly below the threshold, ascending.
std::vector<int> label_set_from_threshold(const LabelScoreRow& row, const Threshold& threshold);

}  // namespace cep
