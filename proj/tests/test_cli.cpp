#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "test_util.hpp"

using doctest::Approx;
using nlohmann::json;

namespace {

const std::string kCli = CEP_CLI_PATH;

std::string quoted(const std::filesystem::path& path) { return "'" + path.string() + "'"; }

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("baseline emits the split-conformal set as json") {
  auto calib = testutil::write_temp("cli_calib.csv", "score\n3\n1\n2\n");
  auto row = testutil::write_temp("cli_row.csv", "label,score\n0,1.5\n1,2.5\n2,3.5\n");
  auto res = testutil::run_command(kCli + " baseline --alpha 0.5 --calib " + quoted(calib) +
                                   " --row " + quoted(row));
  REQUIRE(res.exit_code == 0);
  json out = json::parse(res.output);
  CHECK(out.at("alpha").get<double>() == 0.5);
  CHECK(out.at("n").get<int>() == 3);
  CHECK(out.at("threshold").get<double>() == 2.0);
  CHECK(out.at("label_set") == json::array({0}));
}

TEST_CASE("baseline in csv format emits field,value rows") {
  auto calib = testutil::write_temp("cli_calib2.csv", "score\n3\n1\n2\n");
  auto row = testutil::write_temp("cli_row2.csv", "label,score\n0,1.5\n1,2.5\n2,3.5\n");
  auto res = testutil::run_command(kCli + " baseline --alpha 0.5 --calib " + quoted(calib) +
                                   " --row " + quoted(row) + " --format csv");
  REQUIRE(res.exit_code == 0);
  CHECK(res.output.rfind("field,value\n", 0) == 0);
  CHECK(res.output.find("alpha,0.5\n") != std::string::npos);
  CHECK(res.output.find("threshold,2.0\n") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
  auto res = testutil::run_command(kCli);
  CHECK(res.exit_code == 2);
  auto help = testutil::run_command(kCli + " --help");
  CHECK(help.exit_code == 0);
  auto no_seed = testutil::run_command(kCli + " simulate bav --alpha 0.1");
  CHECK(no_seed.exit_code == 2);
  CHECK(no_seed.output.find("--seed") != std::string::npos);
  auto bad_format = testutil::run_command(kCli + " baseline --alpha 0.5 --calib x --row y --format xml");
  CHECK(bad_format.exit_code == 2);
}

TEST_CASE("data errors exit with code 2 and name the problem") {
  auto row = testutil::write_temp("cli_row3.csv", "label,score\n0,1.5\n");
  auto missing = testutil::run_command(kCli + " baseline --alpha 0.5 --calib /nonexistent/f.csv --row " +
                                       quoted(row));
  CHECK(missing.exit_code == 2);
  CHECK(missing.output.find("error:") != std::string::npos);
  CHECK(missing.output.find("/nonexistent/f.csv") != std::string::npos);

  auto calib = testutil::write_temp("cli_calib3.csv", "score\n1\n2\n3\n");
  auto bad_alpha = testutil::run_command(kCli + " baseline --alpha 1.5 --calib " + quoted(calib) +
                                         " --row " + quoted(row));
  CHECK(bad_alpha.exit_code == 2);
  CHECK(bad_alpha.output.find("error:") != std::string::npos);
}

TEST_CASE("sequential batches emit a wealth path and summary") {
  auto stream = testutil::write_temp("cli_stream.csv",
                                     "batch_id,role,score\n"
                                     "b1,calib,1\nb1,calib,2\nb1,calib,3\nb1,test,2.5\n");
  auto path_out = testutil::temp_dir() / "cli_bav_path.csv";
  auto summary_out = testutil::temp_dir() / "cli_bav_summary.json";
  auto res = testutil::run_command(kCli + " bav --alpha 0.5 --input " + quoted(stream) + " --out " +
                                   quoted(path_out) + " --summary " + quoted(summary_out));
  REQUIRE(res.exit_code == 0);

  auto lines = split_lines(testutil::read_file(path_out));
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "t,log_wealth,threshold,covered");
  auto fields = split_fields(lines[1]);
  REQUIRE(fields.size() == 4);
  CHECK(fields[0] == "1");
  CHECK(std::strtod(fields[1].c_str(), nullptr) == Approx(0.16251892949777494).epsilon(1e-12));
  CHECK(fields[2] == "6");
  CHECK(fields[3] == "true");

  json summary = json::parse(testutil::read_file(summary_out));
  CHECK(summary.at("batches").get<int>() == 1);
  CHECK(summary.at("joint_covered").get<bool>() == true);
  CHECK(summary.at("wealth_reached_ville_bar").get<bool>() == false);
  CHECK(summary.at("final_log_wealth").get<double>() == Approx(0.16251892949777494).epsilon(1e-12));
}

TEST_CASE("first grapa batch never bets") {
  auto stream = testutil::write_temp("cli_stream_grapa.csv",
                                     "batch_id,role,score\nb1,calib,1\nb1,calib,2\nb1,test,9\n");
  auto res = testutil::run_command(kCli + " bav --alpha 0.5 --strategy grapa --gamma 0.5 --input " +
                                   quoted(stream));
  REQUIRE(res.exit_code == 0);
  auto lines = split_lines(res.output);
  REQUIRE(lines.size() == 2);
  CHECK(lines[1] == "1,0,inf,true");

  auto zero = testutil::run_command(kCli + " bav --alpha 0.5 --strategy grapa --gamma 0 --input " +
                                    quoted(stream));
  CHECK(zero.exit_code == 2);
}

TEST_CASE("malformed batch streams exit with code 2") {
  auto duo = testutil::write_temp("cli_stream_two.csv",
                                  "batch_id,role,score\na,test,1\na,test,2\n");
  auto res = testutil::run_command(kCli + " bav --alpha 0.5 --input " + quoted(duo));
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("more than one test row") != std::string::npos);

  auto header_only = testutil::write_temp("cli_stream_empty.csv", "batch_id,role,score\n");
  auto empty = testutil::run_command(kCli + " bav --alpha 0.5 --input " + quoted(header_only));
  CHECK(empty.exit_code == 2);
  CHECK(empty.output.find("no batches") != std::string::npos);
}

TEST_CASE("posthoc selects the smallest feasible level and writes the profile") {
  auto calib = testutil::write_temp("cli_ph_calib.csv", "score\n1\n2\n3\n");
  auto row = testutil::write_temp("cli_ph_row.csv", "label,score\n0,0.5\n1,5\n2,7\n");
  auto profile_out = testutil::temp_dir() / "cli_ph_profile.csv";
  auto res = testutil::run_command(kCli + " posthoc --C 2 --grid 0.1:0.5:0.1 --calib " + quoted(calib) +
                                   " --row " + quoted(row) + " --profile-out " + quoted(profile_out));
  REQUIRE(res.exit_code == 0);
  json out = json::parse(res.output);
  CHECK(out.at("alpha_tilde").get<double>() == 0.5);
  CHECK(out.at("target_size").get<int>() == 2);
  CHECK(out.at("achieved_size").get<int>() == 2);
  CHECK(out.at("set") == json::array({0, 1}));

  auto lines = split_lines(testutil::read_file(profile_out));
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "alpha,set_size");
  CHECK(lines[1] == "0.1,3");
  auto last = split_fields(lines[5]);
  CHECK(std::strtod(last[0].c_str(), nullptr) == Approx(0.5).epsilon(1e-9));
  CHECK(last[1] == "2");
}

TEST_CASE("infeasible posthoc budgets exit with code 3 after writing the profile") {
  auto calib = testutil::write_temp("cli_ph_calib2.csv", "score\n1\n2\n3\n");
  auto row = testutil::write_temp("cli_ph_row2.csv", "label,score\n0,0.5\n1,5\n2,7\n");
  auto profile_out = testutil::temp_dir() / "cli_ph_profile2.csv";
  auto res = testutil::run_command(kCli + " posthoc --C 1 --grid 0.1:0.5:0.1 --calib " + quoted(calib) +
                                   " --row " + quoted(row) + " --profile-out " + quoted(profile_out));
  CHECK(res.exit_code == 3);
  CHECK(res.output.find("infeasible:") != std::string::npos);
  auto lines = split_lines(testutil::read_file(profile_out));
  CHECK(lines.size() == 6);

  auto bad_grid = testutil::run_command(kCli + " posthoc --C 1 --grid 0.1:0.5 --calib " + quoted(calib) +
                                        " --row " + quoted(row));
  CHECK(bad_grid.exit_code == 2);
  CHECK(bad_grid.output.find("start:stop:step") != std::string::npos);
}

TEST_CASE("single-expert matrices line up with the baseline one rank apart") {
  auto row = testutil::write_temp("cli_mc_row.csv", "label,score\n0,1.5\n1,2\n2,7\n");

  // Tied calibration scores: the adjacent order statistics coincide.
  auto tied_matrix = testutil::write_temp("cli_mc_tied.csv", "expert_1\n2\n2\n2\n");
  auto tied_calib = testutil::write_temp("cli_mc_tied_scores.csv", "score\n2\n2\n2\n");
  auto mc = testutil::run_command(kCli + " mccp --alpha 0.5 --m 1 --matrix " + quoted(tied_matrix) +
                                  " --row " + quoted(row));
  auto base = testutil::run_command(kCli + " baseline --alpha 0.5 --calib " + quoted(tied_calib) +
                                    " --row " + quoted(row));
  REQUIRE(mc.exit_code == 0);
  REQUIRE(base.exit_code == 0);
  json mc_out = json::parse(mc.output);
  json base_out = json::parse(base.output);
  CHECK(mc_out.at("p_threshold").get<double>() == base_out.at("threshold").get<double>());
  CHECK(mc_out.at("p_set") == base_out.at("label_set"));
  CHECK(mc_out.at("m").get<int>() == 1);
  CHECK(mc_out.at("e_threshold").get<double>() == Approx(6.0).epsilon(1e-8));
  CHECK(mc_out.at("e_set") == json::array({0, 1}));

  // Distinct scores: the pooled rank sits exactly one order statistic lower.
  auto untied_matrix = testutil::write_temp("cli_mc_untied.csv", "expert_1\n1\n2\n3\n4\n");
  auto untied_calib = testutil::write_temp("cli_mc_untied_scores.csv", "score\n1\n2\n3\n4\n");
  auto mc2 = testutil::run_command(kCli + " mccp --alpha 0.5 --m 1 --matrix " + quoted(untied_matrix) +
                                   " --row " + quoted(row));
  auto base2 = testutil::run_command(kCli + " baseline --alpha 0.5 --calib " + quoted(untied_calib) +
                                     " --row " + quoted(row));
  REQUIRE(mc2.exit_code == 0);
  REQUIRE(base2.exit_code == 0);
  CHECK(json::parse(mc2.output).at("p_threshold").get<double>() == 2.0);
  CHECK(json::parse(base2.output).at("threshold").get<double>() == 3.0);
}

TEST_CASE("seeded naive-sequential simulation reports its horizon") {
  auto res = testutil::run_command(kCli +
                                   " simulate naive-sequential --alpha 0.15 --batch-size 13"
                                   " --reps 200 --seed 7");
  REQUIRE(res.exit_code == 0);
  json out = json::parse(res.output);
  CHECK(out.at("method") == "naive-sequential");
  CHECK(out.at("params").at("batches").get<int>() == 3);
  CHECK(out.at("extras").at("horizon").get<int>() == 3);
  CHECK(out.at("trials").get<int>() == 200);
  CHECK(out.at("empirical_coverage").get<double>() < 0.85);
}

TEST_CASE("seeded ville simulation emits its rate in both formats") {
  std::string base = kCli + " simulate ville --alpha 0.25 --reps 20 --batches 5 --batch-size 10 --seed 3";
  auto as_json = testutil::run_command(base);
  REQUIRE(as_json.exit_code == 0);
  json out = json::parse(as_json.output);
  CHECK(out.at("method") == "ville");
  CHECK(out.at("violation_rate").get<double>() >= 0.0);
  CHECK(out.at("violation_rate").get<double>() <= 1.0);
  CHECK(out.at("seed").get<int>() == 3);

  auto as_csv = testutil::run_command(base + " --format csv");
  REQUIRE(as_csv.exit_code == 0);
  CHECK(as_csv.output.rfind("field,value\n", 0) == 0);
  CHECK(as_csv.output.find("method,ville\n") != std::string::npos);
  CHECK(as_csv.output.find("violation_rate,") != std::string::npos);
}

}  // TEST_SUITE
