#include "cep/bav.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <string>

#include "cep/detail/numeric.hpp"

namespace cep {
namespace {

constexpr double kGoldenSectionTol = 1e-9;

void check_e(const EValue& e) {
  detail::require(std::isfinite(e.value) && e.value >= 0.0,
                  "e-value must be finite and nonnegative, got " + std::to_string(e.value));
}

void check_lambda(double lambda) {
  detail::require(lambda >= 0.0 && lambda <= 1.0,
                  "betting fraction must lie in [0, 1], got " + std::to_string(lambda));
}

// Mean log mixture increment over the history at betting fraction lambda.
double growth_objective(const Eigen::Map<const Eigen::ArrayXd>& deltas, double lambda) {
  return (lambda * deltas).log1p().mean();
}

// Its derivative; -inf when some increment hits zero at this lambda.
double growth_derivative(const Eigen::Map<const Eigen::ArrayXd>& deltas, double lambda) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < deltas.size(); ++i) {
    double denom = 1.0 + lambda * deltas(i);
    if (denom <= 0.0) return -std::numeric_limits<double>::infinity();
    sum += deltas(i) / denom;
  }
  return sum / static_cast<double>(deltas.size());
}

MartingaleState apply_increment(MartingaleState state, double raw_e, double increment) {
  state.e_history.push_back(raw_e);
  state.t += 1;
  if (state.wealth_is_zero) return state;
  if (increment == 0.0) {
    state.wealth_is_zero = true;
    state.log_wealth = -std::numeric_limits<double>::infinity();
    return state;
  }
  state.log_wealth += std::log(increment);
  return state;
}

}  // namespace

Strategy Strategy::grapa(double gamma) {
  detail::require(gamma > 0.0 && gamma <= 1.0,
                  "gamma must lie in (0, 1], got " + std::to_string(gamma));
  return Strategy{Kind::Grapa, gamma};
}

double MartingaleState::wealth() const { return wealth_is_zero ? 0.0 : std::exp(log_wealth); }

Threshold bav_mixture_threshold(const MartingaleState& state, const ScoreVector& calib, double alpha,
                                double lambda) {
  detail::require_alpha(alpha);
  check_lambda(lambda);
  double wealth = state.wealth();
  double n = static_cast<double>(calib.size());
  // Membership of score v: wealth * (1 - lambda + lambda * e(v)) < 1/alpha,
  // which rearranges to v * (K - 1) < sum(calib) * (1 - A) with the terms
  // below. K <= 1 admits every score; otherwise a nonpositive right side
  // admits none.
  double a = alpha * wealth * (1.0 - lambda);
  double k = alpha * wealth * (1.0 + lambda * n);
  if (detail::leq_snapped(k, 1.0)) return Threshold::unbounded();
  double rhs = calib.sum() * (1.0 - a);
  if (rhs <= 0.0) return Threshold::empty();
  return Threshold::finite(rhs / (k - 1.0));
}

Threshold bav_threshold(const MartingaleState& state, const ScoreVector& calib, double alpha) {
  return bav_mixture_threshold(state, calib, alpha, 1.0);
}

MartingaleState product_update(MartingaleState state, EValue e) {
  check_e(e);
  return apply_increment(std::move(state), e.value, e.value);
}

MartingaleState mixture_update(MartingaleState state, EValue e, double lambda) {
  check_e(e);
  check_lambda(lambda);
  // At lambda == 1 this expression is exactly e.value, so the update is
  // bit-identical to product_update.
  double increment = 1.0 - lambda + lambda * e.value;
  return apply_increment(std::move(state), e.value, increment);
}

double grapa_lambda(std::span<const double> e_history, double gamma) {
  detail::require(gamma > 0.0 && gamma <= 1.0,
                  "gamma must lie in (0, 1], got " + std::to_string(gamma));
  if (e_history.empty()) return 0.0;
  for (double e : e_history) check_e(EValue{e});

  Eigen::ArrayXd deltas_storage(static_cast<Eigen::Index>(e_history.size()));
  for (std::size_t i = 0; i < e_history.size(); ++i)
    deltas_storage(static_cast<Eigen::Index>(i)) = e_history[i] - 1.0;
  Eigen::Map<const Eigen::ArrayXd> deltas(deltas_storage.data(), deltas_storage.size());

  // The objective is concave in lambda, so endpoint derivative signs settle
  // the boundary cases exactly and also resolve ties toward the smaller
  // lambda (a flat history never bets).
  if (growth_derivative(deltas, 0.0) <= 0.0) return 0.0;
  if (growth_derivative(deltas, gamma) >= 0.0) return gamma;

  constexpr double inv_phi = 0.6180339887498949;
  double lo = 0.0, hi = gamma;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = growth_objective(deltas, x1);
  double f2 = growth_objective(deltas, x2);
  while (hi - lo > kGoldenSectionTol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = growth_objective(deltas, x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = growth_objective(deltas, x1);
    }
  }
  return 0.5 * (lo + hi);
}

std::pair<BatchOutcome, MartingaleState> process_batch(MartingaleState state, const ScoreVector& calib,
                                                       double test_score, double alpha,
                                                       const Strategy& strategy) {
  double lambda = strategy.kind == Strategy::Kind::AllIn
                      ? 1.0
                      : grapa_lambda(state.e_history, strategy.gamma);
  Threshold threshold = bav_mixture_threshold(state, calib, alpha, lambda);
  bool covered = threshold.contains_strict(test_score);
  EValue e = e_value(test_score, calib);

  BatchOutcome outcome;
  outcome.n_t = static_cast<std::size_t>(calib.size());
  outcome.threshold = threshold;
  outcome.e_value_observed = e;
  outcome.covered = covered;

  MartingaleState next = strategy.kind == Strategy::Kind::AllIn
                             ? product_update(std::move(state), e)
                             : mixture_update(std::move(state), e, lambda);
  outcome.batch_id = next.t;
  return {outcome, std::move(next)};
}

}  // namespace cep
