#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cep/scores.hpp"
#include "cep/threshold.hpp"

namespace cep {

// Candidate miscoverage levels, strictly increasing, each in (0, 1).
class AlphaGrid {
 public:
  explicit AlphaGrid(std::vector<double> candidates);

  // start, start+step, ..., up to stop inclusive within 1e-12.
  static AlphaGrid linspaced(double start, double stop, double step);

  // 0.01 through 0.30 in steps of 0.01.
  static AlphaGrid standard();

  const std::vector<double>& candidates() const { return candidates_; }
  std::size_t size() const { return candidates_.size(); }

 private:
  std::vector<double> candidates_;
};

struct AlphaSelection {
  double alpha_tilde = 0.0;
  int target_size = 0;
  int achieved_size = 0;
  std::vector<std::pair<double, int>> profile;  // (alpha, set size) over the whole grid
};

// No grid level meets the size budget. Carries the full profile so callers
// can still report it.
class SelectionInfeasible : public std::runtime_error {
 public:
  SelectionInfeasible(const std::string& message, std::vector<std::pair<double, int>> profile)
      : std::runtime_error(message), profile_(std::move(profile)) {}

  const std::vector<std::pair<double, int>>& profile() const { return profile_; }

 private:
  std::vector<std::pair<double, int>> profile_;
};

// Size of the e-value set at a fixed level: #{y : row[y] < e_set_threshold(calib, alpha)}.
int set_size_at_alpha(const ScoreVector& calib, const LabelScoreRow& row, double alpha);

// Smallest grid level whose set size is at most target_size. Data-dependent:
// the chosen level is a function of calibration scores and the candidate row
// only. Throws SelectionInfeasible when even the largest level is too big.
AlphaSelection select_alpha(const ScoreVector& calib, const LabelScoreRow& row, int target_size,
                            const AlphaGrid& grid);

// select_alpha plus the resulting label set.
std::pair<AlphaSelection, std::vector<int>> fixed_size_set(const ScoreVector& calib, const LabelScoreRow& row,
                                                           int target_size, const AlphaGrid& grid);

struct PosthocTrial {
  bool covered = false;
  double alpha_tilde = 0.0;
};

struct RatioEstimate {
  double ratio = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
};

// Mean of miss / alpha_tilde across trials; at most 1 in expectation for any
// data-dependent level chosen without the test label.
RatioEstimate posthoc_ratio_estimate(std::span<const PosthocTrial> trials);

// High-probability coverage floor 1 - alpha_tilde - sigma * sqrt(2 ln(1/delta))
// under a sub-Gaussian assumption with scale sigma supplied by the caller.
double subgaussian_bound(double alpha_tilde, double sigma, double delta);

}  // namespace cep
