#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cep/mccp.hpp"
#include "cep/scores.hpp"
#include "cep/sim.hpp"
#include "cep/threshold.hpp"

namespace cep {

// Single-column scores file: header `score`, one positive real per row.
std::vector<double> read_scores_csv(const std::filesystem::path& path);

// Two-column variant: header `batch_id,score`; rows grouped by batch in
// file order, a batch's rows must be contiguous.
std::vector<std::pair<std::string, std::vector<double>>> read_batched_scores_csv(
    const std::filesystem::path& path);

// Sequential batch stream: header `batch_id,role,score`, role is `calib` or
// `test`, exactly one test row per batch, batches contiguous in file order.
struct StreamBatch {
  std::string id;
  std::vector<double> calib;
  double test_score = 0.0;
};

std::vector<StreamBatch> read_batch_stream_csv(const std::filesystem::path& path);

// Candidate row: header `label,score`, labels a permutation of 0..K-1.
LabelScoreRow read_candidate_row_csv(const std::filesystem::path& path);

// Expert calibration scores: header `expert_1,...,expert_m`, one row per
// calibration example.
ExpertScoreMatrix read_expert_matrix_csv(const std::filesystem::path& path);

// Shortest round-trip decimal form, locale-independent.
std::string format_double(double value);

// Finite values in round-trip form; "inf" for unbounded, "empty" for empty.
std::string threshold_to_string(const Threshold& threshold);

// Finite thresholds serialize as numbers, the other kinds as the strings
// "inf" / "empty".
nlohmann::json threshold_to_json(const Threshold& threshold);

nlohmann::json report_to_json(const CoverageReport& report);

// Flat `field,value` rows: scalar fields, histogram entries as
// histogram.<size>, extras flattened with dotted paths.
std::string report_to_csv(const CoverageReport& report);

// Any JSON value as flat `field,value` rows with dotted paths, keys in
// lexicographic order.
std::string json_to_csv(const nlohmann::json& value);

// Writes to a temporary sibling then renames, so readers never observe a
// partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace cep
