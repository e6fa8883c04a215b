#include "cep/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "cep/detail/numeric.hpp"
#include "cep/io.hpp"
#include "cep/mccp.hpp"
#include "cep/pcp.hpp"

namespace cep {
namespace {

// Substream roles; together with (repetition, index) they key every draw.
enum StreamRole : std::uint64_t {
  kBatchData = 1,
  kPosthocTrial = 2,
  kCalibLatent = 3,
  kCalibExperts = 4,
  kTestLatent = 5,
};

long long interval_class(const Threshold& t) {
  switch (t.kind()) {
    case Threshold::Kind::Unbounded: return -1;
    case Threshold::Kind::Finite: return -2;
    case Threshold::Kind::Empty: return 0;
  }
  return 0;
}

double binomial_se(double p, std::uint64_t trials) {
  if (trials == 0) return 0.0;
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(trials));
}

const char* family_name(DistSpec::Family family) {
  switch (family) {
    case DistSpec::Family::LogNormal: return "lognormal";
    case DistSpec::Family::Exponential: return "exponential";
    case DistSpec::Family::Pareto: return "pareto";
  }
  return "unknown";
}

nlohmann::json dist_to_json(const DistSpec& dist) {
  return {{"family", family_name(dist.family)}, {"a", dist.a}, {"b", dist.b}};
}

nlohmann::json strategy_to_json(const Strategy& strategy) {
  if (strategy.kind == Strategy::Kind::AllIn) return {{"kind", "all-in"}};
  return {{"kind", "grapa"}, {"gamma", strategy.gamma}};
}

void check_batch_spec(const BatchSpec& spec) {
  detail::require(spec.batch_size >= 1, "batch size must be at least 1");
  detail::require(spec.shift_amplitude >= 0.0 && spec.shift_amplitude < 1.0,
                  "shift amplitude must lie in [0, 1) so scales stay positive");
}

void check_class_config(const ClassGenConfig& config) {
  detail::require(config.num_labels >= 2, "classification generator needs at least 2 labels");
  detail::require(config.concentration > 0.0, "Dirichlet concentration must be positive");
  detail::require(config.model_noise >= 0.0, "model noise must be nonnegative");
  if (config.transform == ClassGenConfig::Transform::InversePower)
    detail::require(config.exponent > 0.0, "inverse-power exponent must be positive");
  detail::require(config.min_ambiguous_labels >= 0 && config.min_ambiguous_labels <= config.num_labels,
                  "ambiguity filter cannot demand more labels than exist");
  if (config.min_ambiguous_labels > 0) {
    detail::require(config.min_ambiguous_mass > 0.0 && config.min_ambiguous_mass < 1.0,
                    "ambiguity mass must lie in (0, 1)");
    detail::require(static_cast<double>(config.min_ambiguous_labels) * config.min_ambiguous_mass <= 1.0,
                    "ambiguity filter demands more probability mass than 1");
  }
}

Eigen::ArrayXd draw_latent_probs(const ClassGenConfig& config, SplitMix64& rng) {
  std::gamma_distribution<double> gamma(config.concentration, 1.0);
  Eigen::ArrayXd w(config.num_labels);
  for (int attempt = 0;; ++attempt) {
    for (int i = 0; i < config.num_labels; ++i) {
      // Clamped away from zero so downstream model probabilities stay
      // strictly positive for every transform.
      w(i) = std::max(gamma(rng), 1e-12);
    }
    w /= w.sum();
    if (config.min_ambiguous_labels <= 0) return w;
    if ((w >= config.min_ambiguous_mass).count() >= config.min_ambiguous_labels) return w;
    if (attempt >= 10000)
      throw std::runtime_error("ambiguity filter rejected 10000 consecutive label distributions");
  }
}

struct BavAggregates {
  std::uint64_t joint_count = 0;
  std::uint64_t violation_count = 0;
  std::uint64_t batch_covered_count = 0;
  std::map<long long, std::uint64_t> histogram;
  double sum_max_log_wealth = 0.0;
};

// Shared core of run_bav_experiment and ville_violation_rate. Batch data
// depends only on (master seed, repetition, t), never on the strategy, so
// strategy comparisons under one factory are paired. Violations are judged
// from the wealth path itself, independently of the threshold inversion the
// coverage flags come from; their agreement is a tested invariant.
BavAggregates run_bav_core(const BatchSpec& spec, double alpha, const Strategy& strategy,
                           std::size_t repetitions, const RngFactory& rng) {
  check_batch_spec(spec);
  detail::require_alpha(alpha);
  detail::require(repetitions >= 1, "need at least one repetition");
  BavAggregates agg;
  double log_ville_bar = -std::log(alpha);
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    SplitMix64 data_rng = rng.stream(rep, 0, kBatchData);
    MartingaleState state;
    bool joint = true;
    double max_log_wealth = 0.0;  // M_0 = 1
    for (std::size_t t = 1; t <= spec.num_batches; ++t) {
      double scale = spec.scale_at(t);
      ScoreVector block = gen_exchangeable_scores(spec.dist, spec.batch_size + 1, data_rng);
      Eigen::ArrayXd scaled = block.values() * scale;
      ScoreVector calib(scaled.head(static_cast<Eigen::Index>(spec.batch_size)));
      double test_score = scaled(static_cast<Eigen::Index>(spec.batch_size));

      auto [outcome, next] = process_batch(std::move(state), calib, test_score, alpha, strategy);
      state = std::move(next);

      joint = joint && outcome.covered;
      agg.batch_covered_count += outcome.covered ? 1 : 0;
      agg.histogram[interval_class(outcome.threshold)] += 1;
      if (!state.wealth_is_zero) max_log_wealth = std::max(max_log_wealth, state.log_wealth);
    }
    agg.joint_count += joint ? 1 : 0;
    agg.violation_count += max_log_wealth >= log_ville_bar ? 1 : 0;
    agg.sum_max_log_wealth += max_log_wealth;
  }
  return agg;
}

}  // namespace

DistSpec DistSpec::lognormal(double mu, double sigma) {
  detail::require(std::isfinite(mu), "lognormal log-mean must be finite");
  // sigma = 0 is the documented degenerate case: every draw is exp(mu).
  detail::require(sigma >= 0.0 && std::isfinite(sigma), "lognormal log-stdev must be nonnegative");
  return DistSpec{Family::LogNormal, mu, sigma};
}

DistSpec DistSpec::exponential(double rate) {
  detail::require(rate > 0.0 && std::isfinite(rate), "exponential rate must be positive");
  return DistSpec{Family::Exponential, rate, 1.0};
}

DistSpec DistSpec::pareto(double shape, double minimum) {
  detail::require(shape > 0.0 && std::isfinite(shape), "pareto shape must be positive");
  detail::require(minimum > 0.0 && std::isfinite(minimum), "pareto minimum must be positive");
  return DistSpec{Family::Pareto, shape, minimum};
}

ScoreVector gen_exchangeable_scores(const DistSpec& dist, std::size_t n, SplitMix64& rng) {
  Eigen::ArrayXd values(static_cast<Eigen::Index>(n));
  switch (dist.family) {
    case DistSpec::Family::LogNormal: {
      if (dist.b == 0.0) {
        values.setConstant(std::exp(dist.a));
        break;
      }
      std::lognormal_distribution<double> d(dist.a, dist.b);
      for (std::size_t i = 0; i < n; ++i) {
        double v;
        do { v = d(rng); } while (v <= 0.0);
        values(static_cast<Eigen::Index>(i)) = v;
      }
      break;
    }
    case DistSpec::Family::Exponential: {
      std::exponential_distribution<double> d(dist.a);
      for (std::size_t i = 0; i < n; ++i) {
        double v;
        do { v = d(rng); } while (v <= 0.0);
        values(static_cast<Eigen::Index>(i)) = v;
      }
      break;
    }
    case DistSpec::Family::Pareto: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (std::size_t i = 0; i < n; ++i) {
        double u = unif(rng);
        values(static_cast<Eigen::Index>(i)) = dist.b * std::pow(1.0 - u, -1.0 / dist.a);
      }
      break;
    }
  }
  return ScoreVector(std::move(values));
}

double BatchSpec::scale_at(std::size_t t) const {
  return 1.0 + shift_amplitude * std::sin(static_cast<double>(t));
}

int sample_label(const Eigen::ArrayXd& probs, SplitMix64& rng) {
  detail::require(probs.size() >= 1, "label distribution must be nonempty");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

ClassInstance gen_class_instance(const ClassGenConfig& config, SplitMix64& rng) {
  check_class_config(config);
  Eigen::ArrayXd p = draw_latent_probs(config, rng);
  int label = sample_label(p, rng);

  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::ArrayXd q(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) q(i) = p(i) * std::exp(config.model_noise * noise(rng));
  q /= q.sum();

  Eigen::ArrayXd row(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    row(i) = config.transform == ClassGenConfig::Transform::CrossEntropy
                 ? cross_entropy_score_guarded(q(i))
                 : inverse_power_score(q(i), config.exponent);
  }
  return ClassInstance{LabelScoreRow(std::move(row)), std::move(p), label};
}

CoverageReport run_bav_experiment(const BatchSpec& spec, double alpha, const Strategy& strategy,
                                  std::size_t repetitions, const RngFactory& rng) {
  BavAggregates agg = run_bav_core(spec, alpha, strategy, repetitions, rng);
  double reps = static_cast<double>(repetitions);
  double batches = reps * static_cast<double>(spec.num_batches);

  CoverageReport report;
  report.method = "bav";
  report.params = {{"alpha", alpha},
                   {"batches", spec.num_batches},
                   {"batch_size", spec.batch_size},
                   {"dist", dist_to_json(spec.dist)},
                   {"shift_amplitude", spec.shift_amplitude},
                   {"strategy", strategy_to_json(strategy)},
                   {"repetitions", repetitions},
                   {"seed", rng.master_seed()}};
  report.trials = repetitions;
  report.empirical_coverage = static_cast<double>(agg.joint_count) / reps;
  report.coverage_se = binomial_se(report.empirical_coverage, report.trials);
  report.set_size_histogram = std::move(agg.histogram);
  report.extras = {{"ville_violation_rate", static_cast<double>(agg.violation_count) / reps},
                   {"per_batch_coverage",
                    spec.num_batches == 0 ? 1.0 : static_cast<double>(agg.batch_covered_count) / batches},
                   {"mean_max_log_wealth", agg.sum_max_log_wealth / reps}};
  return report;
}

std::size_t naive_horizon(double alpha) {
  detail::require_alpha(alpha);
  double t = std::log1p(-alpha) / std::log1p(-alpha / 2.0);
  return static_cast<std::size_t>(detail::ceil_count(t));
}

CoverageReport run_naive_sequential(double alpha, std::size_t batch_size, std::size_t repetitions,
                                    const RngFactory& rng) {
  detail::require_alpha(alpha);
  detail::require(repetitions >= 1, "need at least one repetition");
  // Per-batch coverage of the level-alpha baseline is at most
  // 1 - alpha + 1/(n+1); the horizon argument needs that to be at most
  // 1 - alpha/2, i.e. n >= 2/alpha - 1.
  double bound = 2.0 / alpha - 1.0;
  if (static_cast<double>(batch_size) < bound && !detail::nearly_equal(static_cast<double>(batch_size), bound))
    throw std::invalid_argument("batch size " + std::to_string(batch_size) +
                                " is below the failure construction's bound 2/alpha - 1 = " +
                                std::to_string(bound));

  std::size_t horizon = naive_horizon(alpha);
  DistSpec dist = DistSpec::exponential(1.0);  // continuous, so ties have probability 0
  std::uint64_t joint_count = 0;
  std::uint64_t batch_covered_count = 0;
  std::map<long long, std::uint64_t> histogram;

  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    // Same stream role and draw pattern as the sequential-betting driver, so
    // the two methods see identical data for a given master seed.
    SplitMix64 data_rng = rng.stream(rep, 0, kBatchData);
    bool joint = true;
    for (std::size_t t = 1; t <= horizon; ++t) {
      ScoreVector block = gen_exchangeable_scores(dist, batch_size + 1, data_rng);
      ScoreVector calib(block.values().head(static_cast<Eigen::Index>(batch_size)));
      double test_score = block.values()(static_cast<Eigen::Index>(batch_size));
      Threshold threshold = p_conformal_threshold(calib, alpha);
      bool covered = threshold.contains_inclusive(test_score);
      joint = joint && covered;
      batch_covered_count += covered ? 1 : 0;
      histogram[interval_class(threshold)] += 1;
    }
    joint_count += joint ? 1 : 0;
  }

  double reps = static_cast<double>(repetitions);
  auto k = detail::ceil_count((1.0 - alpha) * static_cast<double>(batch_size + 1));
  CoverageReport report;
  report.method = "naive-sequential";
  report.params = {{"alpha", alpha},
                   {"batches", horizon},
                   {"batch_size", batch_size},
                   {"dist", dist_to_json(dist)},
                   {"repetitions", repetitions},
                   {"seed", rng.master_seed()}};
  report.trials = repetitions;
  report.empirical_coverage = static_cast<double>(joint_count) / reps;
  report.coverage_se = binomial_se(report.empirical_coverage, report.trials);
  report.set_size_histogram = std::move(histogram);
  report.extras = {{"horizon", horizon},
                   {"per_batch_coverage",
                    static_cast<double>(batch_covered_count) / (reps * static_cast<double>(horizon))},
                   {"per_batch_coverage_exact",
                    static_cast<double>(k) / static_cast<double>(batch_size + 1)}};
  return report;
}

CoverageReport run_posthoc_experiment(std::size_t n, int target_size, const AlphaGrid& grid,
                                      std::size_t repetitions, const RngFactory& rng,
                                      const ClassGenConfig& gen) {
  detail::require(n >= 1, "posthoc experiment needs calibration data");
  detail::require(repetitions >= 1, "need at least one repetition");
  check_class_config(gen);

  std::vector<PosthocTrial> trials;
  trials.reserve(repetitions);
  std::map<long long, std::uint64_t> histogram;
  std::map<std::string, std::uint64_t> alpha_histogram;
  std::uint64_t covered_count = 0;
  std::uint64_t infeasible_count = 0;
  std::uint64_t monotonicity_violations = 0;
  int max_achieved_size = 0;
  double sum_alpha = 0.0;

  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    SplitMix64 r = rng.stream(rep, 0, kPosthocTrial);
    Eigen::ArrayXd calib_scores(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      ClassInstance inst = gen_class_instance(gen, r);
      calib_scores(static_cast<Eigen::Index>(i)) = inst.row.score(inst.label);
    }
    ScoreVector calib(std::move(calib_scores));
    ClassInstance test = gen_class_instance(gen, r);

    try {
      auto [selection, labels] = fixed_size_set(calib, test.row, target_size, grid);
      for (std::size_t i = 1; i < selection.profile.size(); ++i) {
        if (selection.profile[i].second > selection.profile[i - 1].second) ++monotonicity_violations;
      }
      bool covered = std::binary_search(labels.begin(), labels.end(), test.label);
      trials.push_back(PosthocTrial{covered, selection.alpha_tilde});
      covered_count += covered ? 1 : 0;
      sum_alpha += selection.alpha_tilde;
      max_achieved_size = std::max(max_achieved_size, selection.achieved_size);
      histogram[static_cast<long long>(labels.size())] += 1;
      alpha_histogram[format_double(selection.alpha_tilde)] += 1;
    } catch (const SelectionInfeasible&) {
      ++infeasible_count;
    }
  }

  CoverageReport report;
  report.method = "posthoc";
  report.params = {{"n", n},
                   {"target_size", target_size},
                   {"grid",
                    {{"start", grid.candidates().front()},
                     {"stop", grid.candidates().back()},
                     {"size", grid.size()}}},
                   {"labels", gen.num_labels},
                   {"repetitions", repetitions},
                   {"seed", rng.master_seed()}};
  report.trials = trials.size();
  double feasible = static_cast<double>(trials.size());
  report.empirical_coverage = trials.empty() ? 0.0 : static_cast<double>(covered_count) / feasible;
  report.coverage_se = binomial_se(report.empirical_coverage, report.trials);
  report.set_size_histogram = std::move(histogram);

  nlohmann::json alpha_hist_json = nlohmann::json::object();
  for (const auto& [key, count] : alpha_histogram) alpha_hist_json[key] = count;
  report.extras = {{"infeasible_count", infeasible_count},
                   {"requested_repetitions", repetitions},
                   {"mean_alpha_tilde", trials.empty() ? 0.0 : sum_alpha / feasible},
                   {"max_achieved_size", max_achieved_size},
                   {"profile_monotonicity_violations", monotonicity_violations},
                   {"alpha_tilde_histogram", std::move(alpha_hist_json)}};
  if (!trials.empty()) {
    RatioEstimate ratio = posthoc_ratio_estimate(trials);
    report.extras["ratio_estimate"] = ratio.ratio;
    report.extras["ratio_standard_error"] = ratio.standard_error;
    // Taylor-style diagnostic: coverage is expected near 1 - mean(alpha);
    // reported, never asserted.
    report.extras["taylor_coverage_floor"] = 1.0 - sum_alpha / feasible;
  }
  return report;
}

std::pair<CoverageReport, CoverageReport> run_mccp_experiment(std::size_t n, int num_experts, double alpha,
                                                              std::size_t repetitions, const RngFactory& rng,
                                                              const ClassGenConfig& gen,
                                                              std::size_t tests_per_split) {
  detail::require(n >= 1, "ambiguous-label experiment needs calibration data");
  detail::require(num_experts >= 1, "need at least one expert");
  detail::require(repetitions >= 1, "need at least one split");
  detail::require(tests_per_split >= 1, "need at least one test point per split");
  detail::require_alpha(alpha);
  check_class_config(gen);

  double inv_alpha = 1.0 / alpha;
  std::uint64_t p_covered = 0, e_covered = 0;
  std::uint64_t p_size_sum = 0, e_size_sum = 0;
  std::map<long long, std::uint64_t> p_histogram, e_histogram;
  double p_cov_sum = 0.0, p_cov_sq_sum = 0.0;
  double e_cov_sum = 0.0, e_cov_sq_sum = 0.0;

  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    Eigen::ArrayXXd scores(static_cast<Eigen::Index>(n), num_experts);
    for (std::size_t i = 0; i < n; ++i) {
      // Instance latents and expert labels live on separate per-(rep, i)
      // substreams: a run with fewer experts consumes a strict prefix of
      // the same label draws, so expert-count comparisons are paired.
      SplitMix64 latent_rng = rng.stream(rep, i, kCalibLatent);
      ClassInstance inst = gen_class_instance(gen, latent_rng);
      SplitMix64 expert_rng = rng.stream(rep, i, kCalibExperts);
      for (int j = 0; j < num_experts; ++j) {
        int expert_label = sample_label(inst.label_probs, expert_rng);
        scores(static_cast<Eigen::Index>(i), j) = inst.row.score(expert_label);
      }
    }
    ExpertScoreMatrix matrix(std::move(scores));
    Threshold p_threshold = mc_p_threshold(matrix, alpha);

    std::uint64_t p_split_covered = 0, e_split_covered = 0;
    for (std::size_t j = 0; j < tests_per_split; ++j) {
      SplitMix64 test_rng = rng.stream(rep, j, kTestLatent);
      ClassInstance test = gen_class_instance(gen, test_rng);
      double true_score = test.row.score(test.label);

      bool p_cov = p_threshold.contains_inclusive(true_score);
      bool e_cov = mc_e_value(matrix, true_score).value < inv_alpha;
      p_split_covered += p_cov ? 1 : 0;
      e_split_covered += e_cov ? 1 : 0;

      long long p_size = 0, e_size = 0;
      for (Eigen::Index y = 0; y < test.row.num_labels(); ++y) {
        if (p_threshold.contains_inclusive(test.row.score(y))) ++p_size;
        if (mc_e_value(matrix, test.row.score(y)).value < inv_alpha) ++e_size;
      }
      p_histogram[p_size] += 1;
      e_histogram[e_size] += 1;
      p_size_sum += static_cast<std::uint64_t>(p_size);
      e_size_sum += static_cast<std::uint64_t>(e_size);
    }
    p_covered += p_split_covered;
    e_covered += e_split_covered;
    double tests = static_cast<double>(tests_per_split);
    double pc = static_cast<double>(p_split_covered) / tests;
    double ec = static_cast<double>(e_split_covered) / tests;
    p_cov_sum += pc;
    p_cov_sq_sum += pc * pc;
    e_cov_sum += ec;
    e_cov_sq_sum += ec * ec;
  }

  double reps = static_cast<double>(repetitions);
  std::uint64_t total_tests = repetitions * tests_per_split;
  nlohmann::json params = {{"n", n},
                           {"num_experts", num_experts},
                           {"alpha", alpha},
                           {"labels", gen.num_labels},
                           {"splits", repetitions},
                           {"tests_per_split", tests_per_split},
                           {"seed", rng.master_seed()}};

  auto build = [&](const char* method, std::uint64_t covered, std::uint64_t size_sum,
                   std::map<long long, std::uint64_t>&& histogram, double cov_sum, double cov_sq_sum) {
    CoverageReport report;
    report.method = method;
    report.params = params;
    report.trials = total_tests;
    report.empirical_coverage = static_cast<double>(covered) / static_cast<double>(total_tests);
    report.coverage_se = binomial_se(report.empirical_coverage, report.trials);
    report.set_size_histogram = std::move(histogram);
    double mean_cov = cov_sum / reps;
    double var = std::max(0.0, cov_sq_sum / reps - mean_cov * mean_cov);
    report.extras = {{"split_coverage_stdev", std::sqrt(var)},
                     {"mean_set_size", static_cast<double>(size_sum) / static_cast<double>(total_tests)}};
    return report;
  };

  return {build("mccp-p", p_covered, p_size_sum, std::move(p_histogram), p_cov_sum, p_cov_sq_sum),
          build("mccp-e", e_covered, e_size_sum, std::move(e_histogram), e_cov_sum, e_cov_sq_sum)};
}

double ville_violation_rate(const BatchSpec& spec, double alpha, const Strategy& strategy,
                            std::size_t repetitions, const RngFactory& rng) {
  BavAggregates agg = run_bav_core(spec, alpha, strategy, repetitions, rng);
  return static_cast<double>(agg.violation_count) / static_cast<double>(repetitions);
}

}  // namespace cep
