#pragma once

#include "adbench/core.hpp"
#include "adbench/dataio.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace adbench::preprocess {

enum class SliceMode { day, full_series };
enum class SplitMode { by_house, nilm_holdout };

SliceMode parse_slice_mode(std::string_view s);
SplitMode parse_split_mode(std::string_view s);
std::string to_string(SliceMode m);
std::string to_string(SplitMode m);

struct PreprocessConfig {
  std::int64_t target_interval_s = 1800;
  std::int64_t max_gap_s = 3600;
  SliceMode slice = SliceMode::day;
  double on_threshold_w = 15.0;
  int on_min_samples = 2;
  SplitMode split = SplitMode::by_house;
  int holdout_houses = 2;  // nilm_holdout only
  std::uint64_t seed = 1;
};

/// Bucket-mean downsampling by k = target / interval. A bucket with any missing
/// reading is missing; a trailing partial bucket is dropped with a warning.
TimeSeries resample(const TimeSeries& series, std::int64_t target_interval_s);

/// Linear interpolation of interior missing runs whose span (run length times
/// interval) is at most max_gap_s. Edge runs stay missing.
TimeSeries interpolate_gaps(const TimeSeries& series, std::int64_t max_gap_s);

struct DaySlice {
  Timestamp start = 0;
  Vector aggregate;
  std::map<std::string, Vector> appliances;
};

/// Complete days of a record already on the `interval_s` grid. Days start at UTC
/// midnight; partial days and days with any missing reading are dropped.
std::vector<DaySlice> slice_days(const dataio::HouseholdRecord& record, std::int64_t interval_s);

/// 1 iff some run of at least `on_min_samples` consecutive readings exceeds the threshold.
int assign_label(const Vector& appliance_day, double on_threshold_w, int on_min_samples);

/// Undersamples the majority class (seeded) to the minority size; order of retained
/// instances follows the input order.
Dataset balance_train(const Dataset& instances, std::uint64_t seed);

/// Fraction of positive instances.
double imbalance_ratio(const Dataset& instances);

/// House counts for a 70/10/20 split of `n_houses` (at least one house each).
struct HouseCounts {
  std::size_t train, validation, test;
};
HouseCounts by_house_counts(std::size_t n_houses);

/// House-disjoint split. by_house: 70/10/20 of houses. nilm_holdout: `holdout_houses`
/// random test houses; validation is 1/8 of the remaining instances. The train set
/// is balanced with balance_train.
ExperimentSplit split(const Dataset& instances, const PreprocessConfig& config);

/// Builds labeled instances for one appliance case.
/// NILM records: labels come from the appliance channel at the record's base grid,
/// computed before resampling; the aggregate is resampled, gap-filled, and sliced.
/// Survey records: the house's questionnaire label applies to every slice. In
/// full-series mode the gap-filled aggregate is one instance (dropped if still
/// incomplete); all instances are truncated to the shortest retained length.
Dataset build_instances(const std::vector<dataio::HouseholdRecord>& records, const std::string& case_id,
                        const PreprocessConfig& config);

// --- persistence ----------------------------------------------------------

/// Writes per-house CSV files (retained slices only), `day_labels.csv`
/// (source_id,start,label) and `manifest.txt` (key = value).
void write_preprocessed(const Dataset& instances, const std::map<std::string, std::string>& manifest,
                        const std::filesystem::path& dir);

struct PreprocessedDataset {
  Dataset instances;
  std::map<std::string, std::string> manifest;
};

PreprocessedDataset read_preprocessed(const std::filesystem::path& dir);

}  // namespace adbench::preprocess
