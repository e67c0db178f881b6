#pragma once

#include "adbench/core.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace adbench::harness {

enum class RunStatus { ok, timeout, error };
RunStatus parse_run_status(std::string_view s);
std::string to_string(RunStatus s);

/// One fit + evaluate of one classifier on one split.
struct RunRecord {
  std::string run_id;
  std::string config_digest;
  std::string dataset;
  std::string classifier;
  std::string case_id;
  std::int64_t interval_s = 0;
  std::uint64_t seed = 0;
  std::string data_size_mode = "none";
  double fraction = 1.0;
  RunStatus status = RunStatus::ok;
  // Present iff status == ok.
  std::optional<double> macro_f1, f1_pos, f1_neg;
  double ib_ratio = 0;
  std::size_t n_train = 0, n_test = 0;
  double train_time_s = 0, infer_time_s = 0;
  std::string error;

  bool operator==(const RunRecord&) const = default;
};

/// Canonical JSON (sorted keys, no "digest") and its FNV-1a hex digest.
std::string canonical_json(const RunRecord& r);
std::string record_digest(const RunRecord& r);

std::string to_json_line(const RunRecord& r);
/// Throws ParseError(line) on malformed JSON, schema violations or a digest mismatch.
RunRecord parse_json_line(std::string_view line, std::size_t line_no, std::string_view source = {});

/// Appends one line per record, creating parent directories as needed.
void write_results(const std::vector<RunRecord>& records, const std::filesystem::path& path);
/// `path` may be a file, a directory (every *.jsonl inside) or a glob pattern; matched
/// files are read in sorted order.
std::vector<RunRecord> read_results(const std::filesystem::path& path);

/// Aggregate of one (dataset, case, classifier, interval, mode, fraction) group.
struct Summary {
  std::string dataset, case_id, classifier, data_size_mode;
  std::int64_t interval_s = 0;
  double fraction = 1.0;
  std::size_t n_ok = 0, n_timeout = 0, n_error = 0;
  // Over ok runs only; empty when n_ok == 0.
  std::optional<double> mean, std, min, max;
};

std::vector<Summary> summarize(const std::vector<RunRecord>& records);

/// Mid-ranks (1 = largest value); ties share the average of their positions.
std::vector<double> mid_ranks(const std::vector<double>& values);

enum class ReportFormat { csv, markdown };
ReportFormat parse_report_format(std::string_view s);

/// Table of mean Macro F1: rows = case x dataset, columns = classifiers, with
/// per-appliance averages, per-row averages, and classifier average score/rank rows.
std::string report(const std::vector<RunRecord>& records, ReportFormat format);

}  // namespace adbench::harness
