#include "cep/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "cep/detail/numeric.hpp"

namespace cep {
namespace {

std::runtime_error parse_error(const std::filesystem::path& path, std::size_t line_no,
                               const std::string& what) {
  return std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string_view field =
        comma == std::string_view::npos ? line.substr(start) : line.substr(start, comma - start);
    fields.emplace_back(trim(field));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_double(const std::string& field, const std::filesystem::path& path, std::size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw parse_error(path, line_no, "expected a number, got '" + field + "'");
  return value;
}

int parse_int(const std::string& field, const std::filesystem::path& path, std::size_t line_no) {
  int value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw parse_error(path, line_no, "expected an integer, got '" + field + "'");
  return value;
}

// Reads all nonempty lines; lines[0] is the header. Throws if the file is
// missing or has no header.
std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    lines.push_back(line);
  }
  if (lines.empty()) throw std::runtime_error(path.string() + " is empty; expected a header row");
  return lines;
}

void require_header(const std::vector<std::string>& fields, const std::vector<std::string>& expected,
                    const std::filesystem::path& path) {
  bool ok = fields.size() == expected.size();
  for (std::size_t i = 0; ok && i < fields.size(); ++i) ok = fields[i] == expected[i];
  if (!ok) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) want += ',';
      want += expected[i];
    }
    throw parse_error(path, 1, "expected header '" + want + "'");
  }
}

void append_json_csv_rows(const std::string& prefix, const nlohmann::json& value, std::string& out);

void append_csv_row(const std::string& field, const nlohmann::json& value, std::string& out) {
  out += field;
  out += ',';
  if (value.is_string())
    out += value.get<std::string>();
  else
    out += value.dump();
  out += '\n';
}

void append_json_csv_rows(const std::string& prefix, const nlohmann::json& value, std::string& out) {
  if (value.is_object()) {
    for (const auto& [key, child] : value.items()) append_json_csv_rows(prefix + "." + key, child, out);
  } else if (value.is_array()) {
    for (std::size_t i = 0; i < value.size(); ++i)
      append_json_csv_rows(prefix + "." + std::to_string(i), value[i], out);
  } else {
    append_csv_row(prefix, value, out);
  }
}

}  // namespace

std::vector<double> read_scores_csv(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  require_header(split_fields(lines[0]), {"score"}, path);
  std::vector<double> scores;
  scores.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> fields = split_fields(lines[i]);
    if (fields.size() != 1) throw parse_error(path, i + 1, "expected 1 field");
    scores.push_back(parse_double(fields[0], path, i + 1));
  }
  return scores;
}

std::vector<std::pair<std::string, std::vector<double>>> read_batched_scores_csv(
    const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  require_header(split_fields(lines[0]), {"batch_id", "score"}, path);
  std::vector<std::pair<std::string, std::vector<double>>> batches;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> fields = split_fields(lines[i]);
    if (fields.size() != 2) throw parse_error(path, i + 1, "expected 2 fields");
    const std::string& id = fields[0];
    if (id.empty()) throw parse_error(path, i + 1, "empty batch_id");
    double score = parse_double(fields[1], path, i + 1);
    if (batches.empty() || batches.back().first != id) {
      for (const auto& [seen, unused] : batches) {
        if (seen == id)
          throw parse_error(path, i + 1, "batch '" + id + "' is not contiguous in the file");
      }
      batches.emplace_back(id, std::vector<double>{});
    }
    batches.back().second.push_back(score);
  }
  return batches;
}

std::vector<StreamBatch> read_batch_stream_csv(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  require_header(split_fields(lines[0]), {"batch_id", "role", "score"}, path);
  std::vector<StreamBatch> batches;
  std::vector<bool> has_test;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> fields = split_fields(lines[i]);
    if (fields.size() != 3) throw parse_error(path, i + 1, "expected 3 fields");
    const std::string& id = fields[0];
    if (id.empty()) throw parse_error(path, i + 1, "empty batch_id");
    const std::string& role = fields[1];
    double score = parse_double(fields[2], path, i + 1);
    if (batches.empty() || batches.back().id != id) {
      for (const StreamBatch& seen : batches) {
        if (seen.id == id)
          throw parse_error(path, i + 1, "batch '" + id + "' is not contiguous in the file");
      }
      batches.push_back(StreamBatch{id, {}, 0.0});
      has_test.push_back(false);
    }
    if (role == "calib") {
      batches.back().calib.push_back(score);
    } else if (role == "test") {
      if (has_test.back())
        throw parse_error(path, i + 1, "batch '" + id + "' has more than one test row");
      batches.back().test_score = score;
      has_test.back() = true;
    } else {
      throw parse_error(path, i + 1, "role must be 'calib' or 'test', got '" + role + "'");
    }
  }
  for (std::size_t b = 0; b < batches.size(); ++b) {
    if (!has_test[b])
      throw std::runtime_error(path.string() + ": batch '" + batches[b].id + "' has no test row");
  }
  return batches;
}

LabelScoreRow read_candidate_row_csv(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  require_header(split_fields(lines[0]), {"label", "score"}, path);
  std::size_t k = lines.size() - 1;
  if (k == 0) throw std::runtime_error(path.string() + " has no label rows");
  Eigen::ArrayXd scores(static_cast<Eigen::Index>(k));
  std::vector<bool> seen(k, false);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> fields = split_fields(lines[i]);
    if (fields.size() != 2) throw parse_error(path, i + 1, "expected 2 fields");
    int label = parse_int(fields[0], path, i + 1);
    if (label < 0 || static_cast<std::size_t>(label) >= k)
      throw parse_error(path, i + 1,
                        "label " + std::to_string(label) + " outside 0.." + std::to_string(k - 1));
    if (seen[static_cast<std::size_t>(label)])
      throw parse_error(path, i + 1, "label " + std::to_string(label) + " appears twice");
    seen[static_cast<std::size_t>(label)] = true;
    scores(label) = parse_double(fields[1], path, i + 1);
  }
  return LabelScoreRow(std::move(scores));
}

ExpertScoreMatrix read_expert_matrix_csv(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  std::vector<std::string> header = split_fields(lines[0]);
  std::vector<std::string> expected;
  expected.reserve(header.size());
  for (std::size_t j = 0; j < header.size(); ++j) expected.push_back("expert_" + std::to_string(j + 1));
  require_header(header, expected, path);
  Eigen::Index m = static_cast<Eigen::Index>(header.size());
  Eigen::Index n = static_cast<Eigen::Index>(lines.size() - 1);
  Eigen::ArrayXXd scores(n, m);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> fields = split_fields(lines[i]);
    if (fields.size() != header.size())
      throw parse_error(path, i + 1, "expected " + std::to_string(header.size()) + " fields");
    for (std::size_t j = 0; j < fields.size(); ++j)
      scores(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) =
          parse_double(fields[j], path, i + 1);
  }
  return ExpertScoreMatrix(std::move(scores));
}

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  detail::require(ec == std::errc{}, "double formatting failed");
  return std::string(buffer, ptr);
}

std::string threshold_to_string(const Threshold& threshold) {
  switch (threshold.kind()) {
    case Threshold::Kind::Unbounded: return "inf";
    case Threshold::Kind::Empty: return "empty";
    case Threshold::Kind::Finite: return format_double(threshold.value());
  }
  return "empty";
}

nlohmann::json threshold_to_json(const Threshold& threshold) {
  if (threshold.is_finite()) return threshold.value();
  return threshold_to_string(threshold);
}

nlohmann::json report_to_json(const CoverageReport& report) {
  nlohmann::json histogram = nlohmann::json::object();
  for (const auto& [size, count] : report.set_size_histogram)
    histogram[std::to_string(size)] = count;
  return {{"method", report.method},
          {"params", report.params},
          {"trials", report.trials},
          {"empirical_coverage", report.empirical_coverage},
          {"coverage_se", report.coverage_se},
          {"set_size_histogram", std::move(histogram)},
          {"extras", report.extras}};
}

std::string json_to_csv(const nlohmann::json& value) {
  std::string out = "field,value\n";
  if (value.is_object()) {
    for (const auto& [key, child] : value.items()) append_json_csv_rows(key, child, out);
  } else {
    append_csv_row("value", value, out);
  }
  return out;
}

std::string report_to_csv(const CoverageReport& report) {
  std::string out = "field,value\n";
  append_csv_row("method", report.method, out);
  append_json_csv_rows("params", report.params, out);
  append_csv_row("trials", report.trials, out);
  append_csv_row("empirical_coverage", report.empirical_coverage, out);
  append_csv_row("coverage_se", report.coverage_se, out);
  for (const auto& [size, count] : report.set_size_histogram)
    append_csv_row("histogram." + std::to_string(size), count, out);
  append_json_csv_rows("extras", report.extras, out);
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace cep
