#include "cep/posthoc.hpp"

#include <algorithm>
#include <cmath>

#include "cep/core.hpp"
#include "cep/detail/numeric.hpp"

namespace cep {

namespace {
constexpr double kGridEndpointTol = 1e-12;
}

AlphaGrid::AlphaGrid(std::vector<double> candidates) : candidates_(std::move(candidates)) {
  detail::require(!candidates_.empty(), "alpha grid must be nonempty");
  for (std::size_t i = 0; i < candidates_.size(); ++i) {
    detail::require(candidates_[i] > 0.0 && candidates_[i] < 1.0,
                    "alpha grid entry " + std::to_string(i) + " must lie in (0, 1)");
    if (i > 0)
      detail::require(candidates_[i] > candidates_[i - 1],
                      "alpha grid must be strictly increasing at entry " + std::to_string(i));
  }
}

AlphaGrid AlphaGrid::linspaced(double start, double stop, double step) {
  detail::require(step > 0.0, "grid step must be positive");
  detail::require(stop >= start, "grid stop must not precede start");
  std::vector<double> values;
  for (int i = 0;; ++i) {
    double v = start + static_cast<double>(i) * step;
    if (v > stop + kGridEndpointTol) break;
    values.push_back(v);
  }
  return AlphaGrid(std::move(values));
}

AlphaGrid AlphaGrid::standard() { return linspaced(0.01, 0.30, 0.01); }

int set_size_at_alpha(const ScoreVector& calib, const LabelScoreRow& row, double alpha) {
  Threshold threshold = e_set_threshold(calib, alpha);
  int size = 0;
  for (Eigen::Index y = 0; y < row.num_labels(); ++y) {
    if (threshold.contains_strict(row.score(y))) ++size;
  }
  return size;
}

AlphaSelection select_alpha(const ScoreVector& calib, const LabelScoreRow& row, int target_size,
                            const AlphaGrid& grid) {
  detail::require(target_size >= 0, "target size must be nonnegative");
  std::vector<std::pair<double, int>> profile;
  profile.reserve(grid.size());
  for (double alpha : grid.candidates())
    profile.emplace_back(alpha, set_size_at_alpha(calib, row, alpha));

  // Set size is nonincreasing in alpha, so the first level under budget is
  // the infimum over the grid.
  for (const auto& [alpha, size] : profile) {
    if (size <= target_size) {
      AlphaSelection selection;
      selection.alpha_tilde = alpha;
      selection.target_size = target_size;
      selection.achieved_size = size;
      selection.profile = std::move(profile);
      return selection;
    }
  }
  // Build the message before std::move(profile): argument evaluation order is
  // unspecified, and the move must not outrun the back() reads.
  std::string message = "no grid level achieves set size <= " + std::to_string(target_size) +
                        "; smallest size over the grid is " +
                        std::to_string(profile.back().second) + " at alpha " +
                        std::to_string(profile.back().first);
  throw SelectionInfeasible(std::move(message), std::move(profile));
}

std::pair<AlphaSelection, std::vector<int>> fixed_size_set(const ScoreVector& calib, const LabelScoreRow& row,
                                                           int target_size, const AlphaGrid& grid) {
  AlphaSelection selection = select_alpha(calib, row, target_size, grid);
  std::vector<int> labels = label_set_from_threshold(row, e_set_threshold(calib, selection.alpha_tilde));
  return {std::move(selection), std::move(labels)};
}

RatioEstimate posthoc_ratio_estimate(std::span<const PosthocTrial> trials) {
  detail::require(!trials.empty(), "ratio estimate needs at least one trial");
  double sum = 0.0, sum_sq = 0.0;
  for (const PosthocTrial& trial : trials) {
    detail::require(trial.alpha_tilde > 0.0 && trial.alpha_tilde < 1.0,
                    "trial alpha must lie in (0, 1), got " + std::to_string(trial.alpha_tilde));
    double x = trial.covered ? 0.0 : 1.0 / trial.alpha_tilde;
    sum += x;
    sum_sq += x * x;
  }
  double n = static_cast<double>(trials.size());
  double mean = sum / n;
  double variance = std::max(0.0, sum_sq / n - mean * mean);
  double se = trials.size() > 1 ? std::sqrt(variance / (n - 1.0)) : 0.0;
  return RatioEstimate{mean, se, trials.size()};
}

double subgaussian_bound(double alpha_tilde, double sigma, double delta) {
  detail::require(alpha_tilde > 0.0 && alpha_tilde < 1.0, "alpha must lie in (0, 1)");
  detail::require(sigma >= 0.0, "sigma must be nonnegative");
  detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  return 1.0 - alpha_tilde - sigma * std::sqrt(2.0 * std::log(1.0 / delta));
}

}  // namespace cep
