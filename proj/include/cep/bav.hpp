#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "cep/core.hpp"

namespace cep {

// Betting strategy for sequential batches. AllIn stakes the entire wealth on
// each batch e-value; Grapa bets a fraction lambda_t chosen from past
// e-values, capped at gamma in (0, 1].
struct Strategy {
  enum class Kind { AllIn, Grapa };

  Kind kind = Kind::AllIn;
  double gamma = 0.5;

  static Strategy all_in() { return Strategy{Kind::AllIn, 1.0}; }
  static Strategy grapa(double gamma = 0.5);
};

// Wealth process over processed batches. log_wealth is the sum of log
// increments so far; once an increment is exactly zero the process is
// absorbed at zero wealth and wealth_is_zero stays set (log_wealth is -inf
// from then on). t always equals e_history.size(); e_history keeps the raw
// batch e-values, not the mixture increments.
struct MartingaleState {
  double log_wealth = 0.0;
  std::size_t t = 0;
  std::vector<double> e_history;
  bool wealth_is_zero = false;

  double wealth() const;
};

struct BatchOutcome {
  std::size_t batch_id = 0;  // 1-based position in the stream
  std::size_t n_t = 0;       // calibration size of this batch
  Threshold threshold = Threshold::unbounded();  // strict membership, computed before the update
  EValue e_value_observed;   // raw batch e-value at the test score
  bool covered = false;      // test score inside the set; UNBOUNDED always covers
};

// Set cut for the next batch under all-in betting. With K =
// wealth * (n_t + 1) * alpha: UNBOUNDED when K <= 1, EMPTY when K > 1 and
// the batch has no calibration mass (n_t = 0), else sum(calib) / (K - 1).
Threshold bav_threshold(const MartingaleState& state, const ScoreVector& calib, double alpha);

// Same inversion for the mixture increment 1 - lambda + lambda * e(v).
// lambda = 1 reduces exactly to bav_threshold.
Threshold bav_mixture_threshold(const MartingaleState& state, const ScoreVector& calib, double alpha,
                                double lambda);

// Multiplies wealth by the raw e-value and appends it to the history.
MartingaleState product_update(MartingaleState state, EValue e);

// Multiplies wealth by 1 - lambda + lambda * e, appends the raw e-value.
// lambda = 1 is bit-identical to product_update.
MartingaleState mixture_update(MartingaleState state, EValue e, double lambda);

// argmax over lambda in [0, gamma] of the mean log mixture increment on the
// observed history. Empty history returns 0. Concave objective: endpoint
// derivative signs decide 0 or gamma exactly (ties resolve to the smallest
// lambda); interior optima via golden-section to absolute tolerance 1e-9.
double grapa_lambda(std::span<const double> e_history, double gamma);

// One sequential step: pick lambda from the history, invert the set cut
// from pre-update wealth, judge coverage of the test score, then update the
// wealth with this batch's e-value.
std::pair<BatchOutcome, MartingaleState> process_batch(MartingaleState state, const ScoreVector& calib,
                                                       double test_score, double alpha,
                                                       const Strategy& strategy);

}  // namespace cep
