#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "cep/io.hpp"
#include "cep/sim.hpp"
#include "cep/threshold.hpp"
#include "test_util.hpp"

using namespace cep;
using doctest::Contains;

TEST_SUITE("io") {

TEST_CASE("single-column scores file") {
  auto path = testutil::write_temp("scores_ok.csv", "score\n1.5\n 2.25 \n3\n");
  std::vector<double> expected{1.5, 2.25, 3.0};
  CHECK(read_scores_csv(path) == expected);

  auto crlf = testutil::write_temp("scores_crlf.csv", "score\r\n1.5\r\n2.5\r\n");
  CHECK(read_scores_csv(crlf) == std::vector<double>{1.5, 2.5});

  CHECK_THROWS_WITH_AS(read_scores_csv(testutil::temp_dir() / "missing.csv"),
                       Contains("missing.csv"), std::runtime_error);
  CHECK_THROWS_WITH_AS(read_scores_csv(testutil::write_temp("scores_empty.csv", "\n\n")),
                       Contains("empty"), std::runtime_error);
  CHECK_THROWS_WITH_AS(read_scores_csv(testutil::write_temp("scores_hdr.csv", "value\n1\n")),
                       Contains("expected header 'score'"), std::runtime_error);
  CHECK_THROWS_WITH_AS(read_scores_csv(testutil::write_temp("scores_bad.csv", "score\n1\nx\n")),
                       Contains(":3: expected a number"), std::runtime_error);
  CHECK_THROWS_WITH_AS(read_scores_csv(testutil::write_temp("scores_wide.csv", "score\n1,2\n")),
                       Contains("expected 1 field"), std::runtime_error);
}

TEST_CASE("batched scores file groups contiguous rows") {
  auto path = testutil::write_temp("batched_ok.csv", "batch_id,score\na,1\na,2\nb,3\n");
  auto batches = read_batched_scores_csv(path);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].first == "a");
  CHECK(batches[0].second == std::vector<double>{1.0, 2.0});
  CHECK(batches[1].first == "b");
  CHECK(batches[1].second == std::vector<double>{3.0});

  auto split = testutil::write_temp("batched_split.csv", "batch_id,score\na,1\nb,2\na,3\n");
  CHECK_THROWS_WITH_AS(read_batched_scores_csv(split),
                       Contains("batch 'a' is not contiguous"), std::runtime_error);
  auto anon = testutil::write_temp("batched_anon.csv", "batch_id,score\n,1\n");
  CHECK_THROWS_WITH_AS(read_batched_scores_csv(anon), Contains("empty batch_id"), std::runtime_error);
}

TEST_CASE("batch stream file enforces one test row per batch") {
  auto path = testutil::write_temp("stream_ok.csv",
                                   "batch_id,role,score\n"
                                   "a,calib,1\na,calib,2\na,test,1.5\n"
                                   "b,test,4\nb,calib,3\n");
  auto batches = read_batch_stream_csv(path);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].id == "a");
  CHECK(batches[0].calib == std::vector<double>{1.0, 2.0});
  CHECK(batches[0].test_score == 1.5);
  CHECK(batches[1].calib == std::vector<double>{3.0});
  CHECK(batches[1].test_score == 4.0);

  auto duo = testutil::write_temp("stream_two_tests.csv",
                                  "batch_id,role,score\na,test,1\na,test,2\n");
  CHECK_THROWS_WITH_AS(read_batch_stream_csv(duo),
                       Contains("batch 'a' has more than one test row"), std::runtime_error);
  auto none = testutil::write_temp("stream_no_test.csv",
                                   "batch_id,role,score\na,calib,1\nb,test,2\n");
  CHECK_THROWS_WITH_AS(read_batch_stream_csv(none),
                       Contains("batch 'a' has no test row"), std::runtime_error);
  auto role = testutil::write_temp("stream_role.csv", "batch_id,role,score\na,train,1\n");
  CHECK_THROWS_WITH_AS(read_batch_stream_csv(role),
                       Contains("role must be 'calib' or 'test'"), std::runtime_error);
}

TEST_CASE("candidate row file is a label permutation") {
  auto path = testutil::write_temp("row_ok.csv", "label,score\n2,3.5\n0,1.5\n1,2.5\n");
  LabelScoreRow row = read_candidate_row_csv(path);
  REQUIRE(row.num_labels() == 3);
  CHECK(row.score(0) == 1.5);
  CHECK(row.score(1) == 2.5);
  CHECK(row.score(2) == 3.5);

  auto dup = testutil::write_temp("row_dup.csv", "label,score\n0,1\n0,2\n");
  CHECK_THROWS_WITH_AS(read_candidate_row_csv(dup), Contains("label 0 appears twice"),
                       std::runtime_error);
  auto range = testutil::write_temp("row_range.csv", "label,score\n0,1\n5,2\n");
  CHECK_THROWS_WITH_AS(read_candidate_row_csv(range), Contains("label 5 outside 0..1"),
                       std::runtime_error);
  auto header_only = testutil::write_temp("row_none.csv", "label,score\n");
  CHECK_THROWS_WITH_AS(read_candidate_row_csv(header_only), Contains("no label rows"),
                       std::runtime_error);
}

TEST_CASE("expert matrix file with numbered columns") {
  auto path = testutil::write_temp("experts_ok.csv", "expert_1,expert_2\n1,3\n2,4\n");
  ExpertScoreMatrix mat = read_expert_matrix_csv(path);
  CHECK(mat.num_examples() == 2);
  CHECK(mat.num_experts() == 2);
  CHECK(mat.scores()(0, 0) == 1.0);
  CHECK(mat.scores()(1, 1) == 4.0);

  auto bad_header = testutil::write_temp("experts_hdr.csv", "expert_1,expert_3\n1,2\n");
  CHECK_THROWS_WITH_AS(read_expert_matrix_csv(bad_header),
                       Contains("expected header 'expert_1,expert_2'"), std::runtime_error);
  auto ragged = testutil::write_temp("experts_ragged.csv", "expert_1,expert_2\n1\n");
  CHECK_THROWS_WITH_AS(read_expert_matrix_csv(ragged), Contains("expected 2 fields"),
                       std::runtime_error);
  auto negative = testutil::write_temp("experts_neg.csv", "expert_1\n-1\n");
  CHECK_THROWS_AS(read_expert_matrix_csv(negative), std::invalid_argument);
}

TEST_CASE("doubles format as shortest round-trip decimals") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(6.0) == "6");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(1e-9) == "1e-09");
  for (double v : {1.0 / 3.0, 0.6297, 1.6, 9.567764362830022, 1e308}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("thresholds serialize by kind") {
  CHECK(threshold_to_string(Threshold::unbounded()) == "inf");
  CHECK(threshold_to_string(Threshold::empty()) == "empty");
  CHECK(threshold_to_string(Threshold::finite(2.5)) == "2.5");
  CHECK(threshold_to_json(Threshold::finite(2.5)) == nlohmann::json(2.5));
  CHECK(threshold_to_json(Threshold::unbounded()) == nlohmann::json("inf"));
  CHECK(threshold_to_json(Threshold::empty()) == nlohmann::json("empty"));
}

TEST_CASE("coverage reports serialize to json and flat csv") {
  CoverageReport report;
  report.method = "demo";
  report.params = {{"alpha", 0.5}, {"dist", {{"family", "exponential"}}}};
  report.trials = 4;
  report.empirical_coverage = 0.75;
  report.coverage_se = 0.25;
  report.set_size_histogram[-1] = 1;
  report.set_size_histogram[2] = 3;
  report.extras = {{"note", "x"}, {"values", {1, 2}}};

  nlohmann::json j = report_to_json(report);
  CHECK(j.at("method") == "demo");
  CHECK(j.at("set_size_histogram").at("-1") == 1);
  CHECK(j.at("set_size_histogram").at("2") == 3);
  CHECK(j.at("extras").at("values")[1] == 2);

  std::string csv = report_to_csv(report);
  CHECK(csv.rfind("field,value\nmethod,demo\n", 0) == 0);
  CHECK(csv.find("params.alpha,0.5\n") != std::string::npos);
  CHECK(csv.find("params.dist.family,exponential\n") != std::string::npos);
  CHECK(csv.find("histogram.-1,1\n") != std::string::npos);
  CHECK(csv.find("histogram.2,3\n") != std::string::npos);
  CHECK(csv.find("extras.values.0,1\n") != std::string::npos);
  CHECK(csv.find("extras.note,x\n") != std::string::npos);

  std::string generic = json_to_csv(nlohmann::json{{"b", 2}, {"a", {{"c", "text"}}}});
  CHECK(generic == "field,value\na.c,text\nb,2\n");
  CHECK(json_to_csv(nlohmann::json(7)) == "field,value\nvalue,7\n");
}

TEST_CASE("atomic writes leave no temporary behind") {
  auto path = testutil::temp_dir() / "atomic_out.json";
  write_file_atomic(path, "{\"ok\":true}\n");
  CHECK(testutil::read_file(path) == "{\"ok\":true}\n");
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  write_file_atomic(path, "second\n");
  CHECK(testutil::read_file(path) == "second\n");
}

}  // TEST_SUITE
