#pragma once

#include "adbench/harness/config.hpp"
#include "adbench/harness/results.hpp"

#include <functional>
#include <string>
#include <vector>

namespace adbench::harness {

struct BudgetResult {
  RunStatus status;
  std::string payload;  // work() result when ok
  std::string error;
};

/// Runs `work` under a wall-clock budget (<= 0: unlimited). When `isolate` is set the
/// work runs in a forked child that is killed at the deadline; otherwise it runs inline
/// and an overrun is reported after the fact.
BudgetResult run_with_budget(const std::function<std::string()>& work, double budget_s, bool isolate);

/// Household records named by the config (generated or read from disk).
std::vector<dataio::HouseholdRecord> load_households(const ExperimentConfig& config);

/// Labeled instances at `interval_s` (labels fixed at the base grid).
Dataset load_instances(const ExperimentConfig& config, std::int64_t interval_s);

/// Shrinks a training set: subset-houses keeps ceil(p*H) random houses with all their
/// series, subset-series keeps ceil(p*n_h) random series of every house. The result is
/// rebalanced.
Dataset subset_train(const Dataset& train, DataSizeMode mode, double p, std::uint64_t seed);

struct RunSpec {
  std::int64_t interval_s;
  DataSizeMode mode = DataSizeMode::none;
  double fraction = 1.0;
};

/// One record per seed. `instances` must come from load_instances(config, spec.interval_s).
std::vector<RunRecord> run_cell(const ExperimentConfig& config, const Dataset& instances, const RunSpec& spec);

/// All seeds at preprocess.target_interval_s with the full training set.
std::vector<RunRecord> run_benchmark(const ExperimentConfig& config);
/// run_benchmark at every interval of config.intervals.
std::vector<RunRecord> sweep_frequency(const ExperimentConfig& config);
/// Every fraction of config.fractions for the configured mode (both modes when none).
std::vector<RunRecord> sweep_datasize(const ExperimentConfig& config);

}  // namespace adbench::harness
