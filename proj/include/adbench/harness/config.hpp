#pragma once

#include "adbench/dataio.hpp"
#include "adbench/preprocess.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace adbench::harness {

enum class DataSizeMode { none, subset_houses, subset_series };
DataSizeMode parse_data_size_mode(std::string_view s);
std::string to_string(DataSizeMode m);

/// Where instances come from: generated in memory, household CSVs, or a directory
/// written by `adbench preprocess`.
enum class DatasetSchema { synthetic, nilm, survey, preprocessed };
DatasetSchema parse_dataset_schema(std::string_view s);
std::string to_string(DatasetSchema s);

using Overrides = std::map<std::string, std::string>;

struct ExperimentConfig {
  std::string dataset_name = "synthetic";
  DatasetSchema schema = DatasetSchema::synthetic;
  std::filesystem::path dataset_path;
  dataio::SynthConfig synth;

  std::string case_id;
  preprocess::PreprocessConfig preprocess;

  std::string classifier = "rocket";
  Overrides overrides;

  /// Sampling intervals for sweep-frequency; run uses preprocess.target_interval_s.
  std::vector<std::int64_t> intervals{60, 600, 900, 1800};
  int n_runs = 5;
  std::vector<std::uint64_t> seeds;  // empty: 1..n_runs
  double time_budget_s = 36000;
  /// Fit/evaluate each run in a forked child so the budget can be enforced.
  bool isolate = true;
  DataSizeMode data_size_mode = DataSizeMode::none;
  std::vector<double> fractions{0.25, 0.5, 0.75, 1.0};
  std::filesystem::path output = "results.jsonl";
  int threads = 1;

  /// Seeds actually used: `seeds` if set, else 1..n_runs.
  std::vector<std::uint64_t> run_seeds() const;
  /// Throws ValidationError on inconsistent settings.
  void validate() const;
  /// Stable hash of every setting that can influence metrics.
  std::string digest() const;
};

/// Parses the ini-style config. Relative dataset/output paths resolve against
/// `base_dir`. Unknown sections or keys are rejected.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Comma-separated lists, e.g. "60, 600,1800".
std::vector<std::int64_t> parse_int_list(std::string_view s);
std::vector<double> parse_double_list(std::string_view s);
std::vector<std::uint64_t> parse_seed_list(std::string_view s);

}  // namespace adbench::harness
