#pragma once

#include <Eigen/Core>
#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "cep/bav.hpp"
#include "cep/posthoc.hpp"
#include "cep/rng.hpp"
#include "cep/scores.hpp"

namespace cep {

// Positive continuous score distributions for synthetic calibration data.
struct DistSpec {
  enum class Family { LogNormal, Exponential, Pareto };

  Family family = Family::Exponential;
  double a = 1.0;  // lognormal: log-mean; exponential: rate; pareto: shape
  double b = 1.0;  // lognormal: log-stdev; pareto: minimum; unused otherwise

  static DistSpec lognormal(double mu, double sigma);
  static DistSpec exponential(double rate);
  static DistSpec pareto(double shape, double minimum);
};

// n i.i.d. draws; i.i.d. data is exchangeable and scores are positive by
// construction for every supported family.
ScoreVector gen_exchangeable_scores(const DistSpec& dist, std::size_t n, SplitMix64& rng);

// T batches of n_t calibration scores plus one test score each. The shift
// schedule scales batch t by 1 + shift_amplitude * sin(t), a deterministic
// drift that keeps every batch internally exchangeable.
struct BatchSpec {
  std::size_t num_batches = 10;
  std::size_t batch_size = 100;
  DistSpec dist = DistSpec::exponential(1.0);
  double shift_amplitude = 0.0;  // in [0, 1)

  double scale_at(std::size_t t) const;
};

// Synthetic K-class instance: latent label distribution ~ symmetric
// Dirichlet(concentration); labels drawn from it; model probabilities are
// the latent ones perturbed by lognormal noise and renormalized; the row
// scores each label under the chosen transform.
struct ClassGenConfig {
  int num_labels = 10;
  double concentration = 0.5;
  double model_noise = 0.5;  // log-stdev of the multiplicative perturbation

  enum class Transform { CrossEntropy, InversePower };
  Transform transform = Transform::CrossEntropy;
  double exponent = 0.25;  // InversePower only

  // Ambiguity filter: resample the latent distribution until at least
  // min_ambiguous_labels labels carry mass >= min_ambiguous_mass.
  int min_ambiguous_labels = 0;
  double min_ambiguous_mass = 0.1;
};

struct ClassInstance {
  LabelScoreRow row;
  Eigen::ArrayXd label_probs;  // latent distribution the labels are drawn from
  int label = 0;               // one draw from label_probs
};

ClassInstance gen_class_instance(const ClassGenConfig& config, SplitMix64& rng);

int sample_label(const Eigen::ArrayXd& probs, SplitMix64& rng);

// Aggregated outcome of a simulation. set_size_histogram keys are label-set
// cardinalities for label-set methods; score-interval methods use -1 for
// unbounded intervals, -2 for bounded nonempty ones, and 0 for empty sets.
// The histogram counts sum to trials times the sets emitted per trial.
struct CoverageReport {
  std::string method;
  nlohmann::json params;
  std::uint64_t trials = 0;
  double empirical_coverage = 0.0;
  double coverage_se = 0.0;  // binomial standard error
  std::map<long long, std::uint64_t> set_size_histogram;
  nlohmann::json extras;
};

// Sequential batch experiment under a chosen betting strategy. Coverage is
// joint over all batches of a repetition; the histogram classifies every
// per-batch threshold. Batch data depends only on (seed, repetition, t), so
// strategies compared under one factory see identical data.
CoverageReport run_bav_experiment(const BatchSpec& spec, double alpha, const Strategy& strategy,
                                  std::size_t repetitions, const RngFactory& rng);

// Number of batches after which independently calibrated level-alpha
// per-batch sets provably lose joint coverage 1 - alpha, given per-batch
// coverage at most 1 - alpha/2:
//   ceil(log(1 - alpha) / log(1 - alpha/2)).
std::size_t naive_horizon(double alpha);

// The failure construction: naive_horizon(alpha) independent batches, each
// covered by its own split-conformal set at level alpha. Requires
// batch_size >= 2/alpha - 1, which caps per-batch coverage at 1 - alpha/2
// and so makes the horizon bound bite.
CoverageReport run_naive_sequential(double alpha, std::size_t batch_size, std::size_t repetitions,
                                    const RngFactory& rng);

// Fixed-size-set experiment: per repetition, n calibration instances and
// one test instance; the level is selected from calibration data and the
// candidate row only. Reports the miss/alpha_tilde ratio estimate in
// extras; infeasible selections are counted separately and excluded.
CoverageReport run_posthoc_experiment(std::size_t n, int target_size, const AlphaGrid& grid,
                                      std::size_t repetitions, const RngFactory& rng,
                                      const ClassGenConfig& gen);

// Ambiguous-ground-truth experiment: per split, n calibration instances
// with num_experts independent label draws each, and tests_per_split test
// points. Returns (pooled-rank report, averaged-e-value report) computed on
// the same splits. Instance substreams are keyed per (rep, instance), so a
// run with fewer experts consumes a strict prefix of the same label draws.
std::pair<CoverageReport, CoverageReport> run_mccp_experiment(std::size_t n, int num_experts, double alpha,
                                                              std::size_t repetitions, const RngFactory& rng,
                                                              const ClassGenConfig& gen,
                                                              std::size_t tests_per_split = 500);

// Fraction of repetitions whose wealth ever reaches 1/alpha within the
// horizon. For all-in betting this is exactly 1 minus joint coverage.
double ville_violation_rate(const BatchSpec& spec, double alpha, const Strategy& strategy,
                            std::size_t repetitions, const RngFactory& rng);

}  // namespace cep
