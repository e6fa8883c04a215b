#include <CLI11.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "cep/bav.hpp"
#include "cep/core.hpp"
#include "cep/io.hpp"
#include "cep/mccp.hpp"
#include "cep/pcp.hpp"
#include "cep/posthoc.hpp"
#include "cep/rng.hpp"
#include "cep/scores.hpp"
#include "cep/sim.hpp"
#include "cep/threshold.hpp"

namespace {

using nlohmann::json;

void emit(const json& value, const std::string& format, const std::string& out_path) {
  std::string content = format == "csv" ? cep::json_to_csv(value) : value.dump(2) + "\n";
  if (out_path.empty())
    std::cout << content;
  else
    cep::write_file_atomic(out_path, content);
}

void emit_report(const cep::CoverageReport& report, const std::string& format,
                 const std::string& out_path) {
  std::string content =
      format == "csv" ? cep::report_to_csv(report) : cep::report_to_json(report).dump(2) + "\n";
  if (out_path.empty())
    std::cout << content;
  else
    cep::write_file_atomic(out_path, content);
}

cep::ScoreVector load_scores(const std::string& path) {
  std::vector<double> raw = cep::read_scores_csv(path);
  Eigen::ArrayXd values =
      Eigen::Map<const Eigen::ArrayXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
  return cep::ScoreVector(std::move(values));
}

// `start:stop:step`, endpoints inclusive within the grid's tolerance.
cep::AlphaGrid parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (parts.size() < 4) {
    std::size_t colon = text.find(':', start);
    std::string piece =
        colon == std::string::npos ? text.substr(start) : text.substr(start, colon - start);
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(piece, &used));
      if (used != piece.size()) throw std::invalid_argument(piece);
    } catch (const std::exception&) {
      throw std::invalid_argument("grid must be start:stop:step with numeric parts, got '" + text + "'");
    }
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 3)
    throw std::invalid_argument("grid must be start:stop:step, got '" + text + "'");
  return cep::AlphaGrid::linspaced(parts[0], parts[1], parts[2]);
}

cep::DistSpec make_dist(const std::string& family, double a, double b) {
  if (family == "exponential") return cep::DistSpec::exponential(a);
  if (family == "lognormal") return cep::DistSpec::lognormal(a, b);
  return cep::DistSpec::pareto(a, b);
}

cep::Strategy make_strategy(const std::string& name, double gamma) {
  return name == "grapa" ? cep::Strategy::grapa(gamma) : cep::Strategy::all_in();
}

std::string profile_to_csv(const std::vector<std::pair<double, int>>& profile) {
  std::string out = "alpha,set_size\n";
  for (const auto& [alpha, size] : profile)
    out += cep::format_double(alpha) + "," + std::to_string(size) + "\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal prediction sets from e-values: single-batch sets, sequential batches, "
               "size-constrained sets, multi-annotator labels, and seeded experiments"};
  app.require_subcommand(1);
  auto format_check = CLI::IsMember({"json", "csv"});
  auto strategy_check = CLI::IsMember({"all-in", "grapa"});
  auto dist_check = CLI::IsMember({"exponential", "lognormal", "pareto"});

  auto* baseline = app.add_subcommand("baseline", "Split conformal label set from calibration scores");
  double b_alpha = 0.5;
  std::string b_calib, b_row, b_out, b_format = "json";
  baseline->add_option("--alpha", b_alpha, "miscoverage level in (0,1)")->required();
  baseline->add_option("--calib", b_calib, "calibration scores CSV (header: score)")->required();
  baseline->add_option("--row", b_row, "candidate row CSV (header: label,score)")->required();
  baseline->add_option("--out", b_out, "output path (stdout when omitted)");
  baseline->add_option("--format", b_format, "output format")->check(format_check);

  auto* bav = app.add_subcommand("bav", "Anytime-valid sets over a stream of score batches");
  double v_alpha = 0.1, v_gamma = 0.5;
  std::string v_input, v_out, v_summary, v_strategy = "all-in";
  bav->add_option("--alpha", v_alpha, "miscoverage level in (0,1)")->required();
  bav->add_option("--input", v_input, "batch stream CSV (header: batch_id,role,score)")->required();
  bav->add_option("--strategy", v_strategy, "betting strategy")->check(strategy_check);
  bav->add_option("--gamma", v_gamma, "betting-fraction cap in (0,1], grapa only");
  bav->add_option("--out", v_out, "per-batch CSV path (stdout when omitted)");
  bav->add_option("--summary", v_summary, "summary JSON path (omitted: no summary file)");

  auto* posthoc = app.add_subcommand("posthoc", "Smallest-level set meeting a size budget");
  int p_target = 1;
  std::string p_calib, p_row, p_grid = "0.01:0.30:0.01", p_out, p_profile, p_format = "json";
  posthoc->add_option("--C,--target-size", p_target, "maximum set size")->required();
  posthoc->add_option("--calib", p_calib, "calibration scores CSV (header: score)")->required();
  posthoc->add_option("--row", p_row, "candidate row CSV (header: label,score)")->required();
  posthoc->add_option("--grid", p_grid, "candidate levels start:stop:step");
  posthoc->add_option("--out", p_out, "selection output path (stdout when omitted)");
  posthoc->add_option("--profile-out", p_profile, "level-vs-size profile CSV path");
  posthoc->add_option("--format", p_format, "selection output format")->check(format_check);

  auto* mccp = app.add_subcommand("mccp", "Label sets from multi-annotator calibration scores");
  double m_alpha = 0.1;
  int m_experts = 0;
  std::string m_matrix, m_row, m_out, m_format = "json";
  mccp->add_option("--alpha", m_alpha, "miscoverage level in (0,1)")->required();
  mccp->add_option("--matrix", m_matrix, "expert scores CSV (header: expert_1,...,expert_m)")->required();
  mccp->add_option("--row", m_row, "candidate row CSV (header: label,score)")->required();
  mccp->add_option("--m", m_experts, "use only the first m expert columns (default: all)");
  mccp->add_option("--out", m_out, "output path (stdout when omitted)");
  mccp->add_option("--format", m_format, "output format")->check(format_check);

  auto* simulate = app.add_subcommand("simulate", "Seeded Monte Carlo coverage experiments");
  simulate->require_subcommand(1);

  auto* sim_bav = simulate->add_subcommand("bav", "Joint coverage of sequential anytime-valid sets");
  double sb_alpha = 0.1, sb_gamma = 0.5, sb_a = 1.0, sb_b = 1.0, sb_shift = 0.0;
  std::uint64_t sb_seed = 0;
  std::size_t sb_reps = 1000, sb_batches = 10, sb_bsize = 100;
  std::string sb_strategy = "all-in", sb_dist = "exponential", sb_out, sb_format = "json";
  sim_bav->add_option("--alpha", sb_alpha, "miscoverage level in (0,1)")->required();
  sim_bav->add_option("--seed", sb_seed, "master seed")->required();
  sim_bav->add_option("--reps", sb_reps, "number of repetitions");
  sim_bav->add_option("--batches", sb_batches, "batches per repetition");
  sim_bav->add_option("--batch-size", sb_bsize, "calibration scores per batch");
  sim_bav->add_option("--strategy", sb_strategy, "betting strategy")->check(strategy_check);
  sim_bav->add_option("--gamma", sb_gamma, "betting-fraction cap in (0,1], grapa only");
  sim_bav->add_option("--dist", sb_dist, "score distribution")->check(dist_check);
  sim_bav->add_option("--dist-a", sb_a, "rate (exponential), log-mean (lognormal), shape (pareto)");
  sim_bav->add_option("--dist-b", sb_b, "log-stdev (lognormal), minimum (pareto)");
  sim_bav->add_option("--shift", sb_shift, "deterministic batch-scale amplitude in [0,1)");
  sim_bav->add_option("--out", sb_out, "report path (stdout when omitted)");
  sim_bav->add_option("--format", sb_format, "report format")->check(format_check);

  auto* sim_naive = simulate->add_subcommand(
      "naive-sequential", "Joint coverage loss of independently calibrated per-batch sets");
  double sn_alpha = 0.1;
  std::uint64_t sn_seed = 0;
  std::size_t sn_reps = 1000, sn_bsize = 100;
  std::string sn_out, sn_format = "json";
  sim_naive->add_option("--alpha", sn_alpha, "miscoverage level in (0,1)")->required();
  sim_naive->add_option("--seed", sn_seed, "master seed")->required();
  sim_naive->add_option("--reps", sn_reps, "number of repetitions");
  sim_naive->add_option("--batch-size", sn_bsize, "calibration scores per batch (>= 2/alpha - 1)");
  sim_naive->add_option("--out", sn_out, "report path (stdout when omitted)");
  sim_naive->add_option("--format", sn_format, "report format")->check(format_check);

  auto* sim_posthoc = simulate->add_subcommand("posthoc", "Coverage of size-constrained sets");
  std::uint64_t sp_seed = 0;
  std::size_t sp_n = 100, sp_reps = 1000;
  int sp_target = 3, sp_labels = 10;
  double sp_conc = 0.5, sp_noise = 0.5;
  std::string sp_grid = "0.01:0.30:0.01", sp_out, sp_format = "json";
  sim_posthoc->add_option("--seed", sp_seed, "master seed")->required();
  sim_posthoc->add_option("--reps", sp_reps, "number of repetitions");
  sim_posthoc->add_option("--n", sp_n, "calibration examples per repetition");
  sim_posthoc->add_option("--C,--target-size", sp_target, "maximum set size");
  sim_posthoc->add_option("--grid", sp_grid, "candidate levels start:stop:step");
  sim_posthoc->add_option("--labels", sp_labels, "number of labels");
  sim_posthoc->add_option("--concentration", sp_conc, "label-distribution concentration");
  sim_posthoc->add_option("--noise", sp_noise, "model-probability noise");
  sim_posthoc->add_option("--out", sp_out, "report path (stdout when omitted)");
  sim_posthoc->add_option("--format", sp_format, "report format")->check(format_check);

  auto* sim_mccp = simulate->add_subcommand("mccp", "Coverage with multi-annotator calibration labels");
  double sm_alpha = 0.3, sm_conc = 0.5, sm_noise = 0.5;
  std::uint64_t sm_seed = 0;
  std::size_t sm_n = 200, sm_reps = 200, sm_tests = 500;
  int sm_m = 20, sm_labels = 10;
  std::string sm_out, sm_format = "json";
  sim_mccp->add_option("--alpha", sm_alpha, "miscoverage level in (0,1)")->required();
  sim_mccp->add_option("--seed", sm_seed, "master seed")->required();
  sim_mccp->add_option("--reps", sm_reps, "number of calibration splits");
  sim_mccp->add_option("--n", sm_n, "calibration examples per split");
  sim_mccp->add_option("--m", sm_m, "expert labels per example");
  sim_mccp->add_option("--tests", sm_tests, "test points per split");
  sim_mccp->add_option("--labels", sm_labels, "number of labels");
  sim_mccp->add_option("--concentration", sm_conc, "label-distribution concentration");
  sim_mccp->add_option("--noise", sm_noise, "model-probability noise");
  sim_mccp->add_option("--out", sm_out, "paired report path (stdout when omitted)");
  sim_mccp->add_option("--format", sm_format, "report format")->check(format_check);

  auto* sim_ville = simulate->add_subcommand("ville", "Rate at which betting wealth ever reaches 1/alpha");
  double sv_alpha = 0.1, sv_gamma = 0.5, sv_a = 1.0, sv_b = 1.0, sv_shift = 0.0;
  std::uint64_t sv_seed = 0;
  std::size_t sv_reps = 1000, sv_batches = 50, sv_bsize = 100;
  std::string sv_strategy = "all-in", sv_dist = "exponential", sv_out, sv_format = "json";
  sim_ville->add_option("--alpha", sv_alpha, "miscoverage level in (0,1)")->required();
  sim_ville->add_option("--seed", sv_seed, "master seed")->required();
  sim_ville->add_option("--reps", sv_reps, "number of repetitions");
  sim_ville->add_option("--batches", sv_batches, "batches per repetition");
  sim_ville->add_option("--batch-size", sv_bsize, "calibration scores per batch");
  sim_ville->add_option("--strategy", sv_strategy, "betting strategy")->check(strategy_check);
  sim_ville->add_option("--gamma", sv_gamma, "betting-fraction cap in (0,1], grapa only");
  sim_ville->add_option("--dist", sv_dist, "score distribution")->check(dist_check);
  sim_ville->add_option("--dist-a", sv_a, "rate (exponential), log-mean (lognormal), shape (pareto)");
  sim_ville->add_option("--dist-b", sv_b, "log-stdev (lognormal), minimum (pareto)");
  sim_ville->add_option("--shift", sv_shift, "deterministic batch-scale amplitude in [0,1)");
  sim_ville->add_option("--out", sv_out, "report path (stdout when omitted)");
  sim_ville->add_option("--format", sv_format, "report format")->check(format_check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*baseline) {
      cep::ScoreVector calib = load_scores(b_calib);
      cep::LabelScoreRow row = cep::read_candidate_row_csv(b_row);
      cep::Threshold threshold = cep::p_conformal_threshold(calib, b_alpha);
      std::vector<int> set = cep::p_conformal_set(row, calib, b_alpha);
      json out = {{"alpha", b_alpha},
                  {"n", calib.size()},
                  {"threshold", cep::threshold_to_json(threshold)},
                  {"label_set", set}};
      emit(out, b_format, b_out);
      return 0;
    }

    if (*bav) {
      std::vector<cep::StreamBatch> batches = cep::read_batch_stream_csv(v_input);
      if (batches.empty()) throw std::invalid_argument(v_input + " contains no batches");
      cep::Strategy strategy = make_strategy(v_strategy, v_gamma);
      cep::MartingaleState state;
      std::string path_csv = "t,log_wealth,threshold,covered\n";
      bool joint = true;
      double max_log_wealth = 0.0;
      for (const cep::StreamBatch& batch : batches) {
        Eigen::ArrayXd values = Eigen::Map<const Eigen::ArrayXd>(
            batch.calib.data(), static_cast<Eigen::Index>(batch.calib.size()));
        cep::ScoreVector calib{std::move(values)};
        auto [outcome, next] =
            cep::process_batch(std::move(state), calib, batch.test_score, v_alpha, strategy);
        state = std::move(next);
        joint = joint && outcome.covered;
        if (!state.wealth_is_zero) max_log_wealth = std::max(max_log_wealth, state.log_wealth);
        path_csv += std::to_string(outcome.batch_id) + "," + cep::format_double(state.log_wealth) +
                    "," + cep::threshold_to_string(outcome.threshold) + "," +
                    (outcome.covered ? "true" : "false") + "\n";
      }
      if (v_out.empty())
        std::cout << path_csv;
      else
        cep::write_file_atomic(v_out, path_csv);
      if (!v_summary.empty()) {
        json summary = {{"alpha", v_alpha},
                        {"strategy", v_strategy},
                        {"batches", batches.size()},
                        {"joint_covered", joint},
                        {"final_log_wealth",
                         state.wealth_is_zero ? json("-inf") : json(state.log_wealth)},
                        {"max_log_wealth", max_log_wealth},
                        {"wealth_reached_ville_bar", max_log_wealth >= -std::log(v_alpha)}};
        cep::write_file_atomic(v_summary, summary.dump(2) + "\n");
      }
      return 0;
    }

    if (*posthoc) {
      cep::ScoreVector calib = load_scores(p_calib);
      cep::LabelScoreRow row = cep::read_candidate_row_csv(p_row);
      cep::AlphaGrid grid = parse_grid(p_grid);
      try {
        auto [selection, labels] = cep::fixed_size_set(calib, row, p_target, grid);
        if (!p_profile.empty()) cep::write_file_atomic(p_profile, profile_to_csv(selection.profile));
        json out = {{"alpha_tilde", selection.alpha_tilde},
                    {"target_size", selection.target_size},
                    {"achieved_size", selection.achieved_size},
                    {"set", labels}};
        emit(out, p_format, p_out);
        return 0;
      } catch (const cep::SelectionInfeasible& e) {
        if (!p_profile.empty()) cep::write_file_atomic(p_profile, profile_to_csv(e.profile()));
        throw;
      }
    }

    if (*mccp) {
      cep::ExpertScoreMatrix matrix = cep::read_expert_matrix_csv(m_matrix);
      if (m_experts > 0) matrix = matrix.restricted_to_experts(m_experts);
      cep::LabelScoreRow row = cep::read_candidate_row_csv(m_row);
      json out = {{"alpha", m_alpha},
                  {"n", matrix.num_examples()},
                  {"m", matrix.num_experts()},
                  {"p_threshold", cep::threshold_to_json(cep::mc_p_threshold(matrix, m_alpha))},
                  {"p_set", cep::mc_p_set(matrix, row, m_alpha)},
                  {"e_threshold", cep::threshold_to_json(cep::mc_e_threshold(matrix, m_alpha))},
                  {"e_set", cep::mc_e_set(matrix, row, m_alpha)}};
      emit(out, m_format, m_out);
      return 0;
    }

    if (*sim_bav) {
      cep::BatchSpec spec{sb_batches, sb_bsize, make_dist(sb_dist, sb_a, sb_b), sb_shift};
      cep::CoverageReport report = cep::run_bav_experiment(
          spec, sb_alpha, make_strategy(sb_strategy, sb_gamma), sb_reps, cep::RngFactory(sb_seed));
      emit_report(report, sb_format, sb_out);
      return 0;
    }

    if (*sim_naive) {
      cep::CoverageReport report =
          cep::run_naive_sequential(sn_alpha, sn_bsize, sn_reps, cep::RngFactory(sn_seed));
      emit_report(report, sn_format, sn_out);
      return 0;
    }

    if (*sim_posthoc) {
      cep::ClassGenConfig gen;
      gen.num_labels = sp_labels;
      gen.concentration = sp_conc;
      gen.model_noise = sp_noise;
      cep::CoverageReport report = cep::run_posthoc_experiment(
          sp_n, sp_target, parse_grid(sp_grid), sp_reps, cep::RngFactory(sp_seed), gen);
      emit_report(report, sp_format, sp_out);
      return 0;
    }

    if (*sim_mccp) {
      cep::ClassGenConfig gen;
      gen.num_labels = sm_labels;
      gen.concentration = sm_conc;
      gen.model_noise = sm_noise;
      auto [p_report, e_report] = cep::run_mccp_experiment(
          sm_n, sm_m, sm_alpha, sm_reps, cep::RngFactory(sm_seed), gen, sm_tests);
      json out = {{"p", cep::report_to_json(p_report)}, {"e", cep::report_to_json(e_report)}};
      emit(out, sm_format, sm_out);
      return 0;
    }

    if (*sim_ville) {
      cep::BatchSpec spec{sv_batches, sv_bsize, make_dist(sv_dist, sv_a, sv_b), sv_shift};
      double rate = cep::ville_violation_rate(
          spec, sv_alpha, make_strategy(sv_strategy, sv_gamma), sv_reps, cep::RngFactory(sv_seed));
      json out = {{"method", "ville"},
                  {"alpha", sv_alpha},
                  {"batches", sv_batches},
                  {"batch_size", sv_bsize},
                  {"dist", {{"family", sv_dist}, {"a", sv_a}, {"b", sv_b}}},
                  {"strategy", sv_strategy},
                  {"gamma", sv_gamma},
                  {"shift_amplitude", sv_shift},
                  {"repetitions", sv_reps},
                  {"seed", sv_seed},
                  {"violation_rate", rate}};
      emit(out, sv_format, sv_out);
      return 0;
    }
  } catch (const cep::SelectionInfeasible& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
