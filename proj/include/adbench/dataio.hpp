#pragma once

#include "adbench/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace adbench::dataio {

/// One household: the aggregate load curve plus either per-appliance channels
/// (NILM-style) or questionnaire labels (survey-style).
struct HouseholdRecord {
  std::string source_id;
  TimeSeries aggregate;
  std::map<std::string, TimeSeries> appliance_channels;
  std::map<std::string, int> survey_labels;

  bool operator==(const HouseholdRecord&) const = default;
};

enum class SchemaKind { nilm, survey };

SchemaKind parse_schema_kind(std::string_view s);

/// Base grid for sub-minute sources; native readings are averaged per minute bucket.
inline constexpr std::int64_t kBaseIntervalS = 60;

// --- timestamps -----------------------------------------------------------

/// Parses "YYYY-MM-DDTHH:MM:SSZ" (UTC). Returns nullopt when malformed.
std::optional<Timestamp> parse_iso8601(std::string_view text);
std::string format_iso8601(Timestamp t);

// --- CSV ingestion --------------------------------------------------------

/// Reads one household file. `name` is used as source_id.
/// Header: timestamp,aggregate[,<appliance>...]. Empty fields are missing readings.
HouseholdRecord read_household_csv(std::istream& in, const std::string& name);
HouseholdRecord read_household_csv(const std::filesystem::path& path);

/// Writes a record's aggregate and appliance channels in the household CSV schema.
/// Values use the shortest round-trip decimal form, so write-then-read is lossless.
void write_household_csv(const HouseholdRecord& record, std::ostream& out);
void write_household_csv(const HouseholdRecord& record, const std::filesystem::path& path);

/// Survey sidecar: header source_id,<appliance>...; cells 0/1.
std::map<std::string, std::map<std::string, int>> read_survey_labels(std::istream& in);
void write_survey_labels(const std::vector<HouseholdRecord>& records, std::ostream& out);

inline constexpr const char* kSurveySidecar = "labels.csv";

/// Reads every *.csv household file in `dir` (filename order; the stem is the
/// source_id). In survey mode the sidecar `labels.csv` supplies survey_labels and
/// household files may only carry the aggregate column.
std::vector<HouseholdRecord> read_csv_dataset(const std::filesystem::path& dir, SchemaKind kind);

/// Writes one file per household plus, when any record has survey labels, the sidecar.
void write_csv_dataset(const std::vector<HouseholdRecord>& records, const std::filesystem::path& dir);

// --- synthetic generator --------------------------------------------------

enum class SignatureShape { rectangular, spike_train, cyclic };

SignatureShape parse_signature_shape(std::string_view s);
std::string to_string(SignatureShape s);

struct ApplianceModel {
  std::string name;
  SignatureShape shape = SignatureShape::rectangular;
  double power_w = 1000;
  /// Rectangular: block length. Spike train: width of each pulse. Cyclic: total span.
  double duration_s = 3600;
  int activations_min = 1;  // per day, uniform in [min, max]
  int activations_max = 1;
  int pulses = 1;                  // spike train: pulses per activation
  double pulse_period_s = 0;       // spike train: pulse spacing (0 => 10 * duration)
  double cycle_period_s = 600;     // cyclic: on/off period, 50% duty
  std::optional<double> presence_prob;  // overrides SynthConfig::presence_prob
};

struct SynthConfig {
  int n_houses = 10;
  int days_per_house = 1;
  std::int64_t base_interval_s = 60;
  std::vector<ApplianceModel> appliance_models;
  double presence_prob = 0.5;
  double noise_std = 0;
  /// Amplitude (W) of a house-specific daily background profile; 0 disables it.
  double house_profile_w = 0;
  Timestamp start = 1388534400;  // 2014-01-01T00:00:00Z
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticHouse {
  HouseholdRecord record;
  TimeSeries background;
};

/// Generates house `index` of the dataset. Depends only on (config, index).
SyntheticHouse generate_house(const SynthConfig& config, int index);

/// Deterministic given the seed; houses are generated independently.
std::vector<HouseholdRecord> generate_synthetic(const SynthConfig& config);

}  // namespace adbench::dataio
