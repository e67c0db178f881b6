#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace adbench {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Seconds since 1970-01-01T00:00:00Z.
using Timestamp = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;

// Error taxonomy. The CLI maps ValidationError/ParseError/DimensionError to exit code 1
// and everything else to 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : ValidationError {
  using ValidationError::ValidationError;
};

struct ParseError : ValidationError {
  ParseError(const std::string& what, std::size_t line)
      : ValidationError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A reading is either a finite non-negative wattage or missing.
using Reading = std::optional<double>;

/// Fixed-interval load curve. Timestamps are implicit: start + j * interval_s.
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(Timestamp start, std::int64_t interval_s, std::vector<Reading> values,
             std::string source_id = {});

  /// Convenience constructor for a series without missing values.
  static TimeSeries from_values(std::span<const double> values, std::int64_t interval_s = 60,
                                Timestamp start = 0, std::string source_id = {});

  Timestamp start() const noexcept { return start_; }
  std::int64_t interval_s() const noexcept { return interval_s_; }
  const std::string& source_id() const noexcept { return source_id_; }
  const std::vector<Reading>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  Timestamp timestamp(std::size_t j) const noexcept {
    return start_ + static_cast<Timestamp>(j) * interval_s_;
  }

  bool has_missing() const noexcept;
  std::size_t missing_count() const noexcept;

  /// Dense copy of the readings; throws ValidationError if any reading is missing.
  Vector dense() const;

  bool operator==(const TimeSeries&) const = default;

 private:
  Timestamp start_ = 0;
  std::int64_t interval_s_ = 60;
  std::vector<Reading> values_;
  std::string source_id_;
};

/// A complete (no missing readings) slice with its appliance-presence label.
struct LabeledInstance {
  Vector values;
  int label = 0;
  std::string case_id;
  std::string source_id;
  Timestamp start = 0;
  std::int64_t interval_s = 60;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
  TimeSeries series() const;
};

using Dataset = std::vector<LabeledInstance>;

struct ExperimentSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
  std::uint64_t seed = 0;
};

/// Validates and wraps a LabeledInstance; throws ValidationError on a bad label.
LabeledInstance make_instance(Vector values, int label, std::string case_id, std::string source_id,
                              Timestamp start = 0, std::int64_t interval_s = 60);

std::vector<int> labels_of(const Dataset& data);

/// Uniform contract for every trained model. Fitted models are immutable; all
/// prediction entry points are const and safe to call concurrently.
class FittedClassifier {
 public:
  virtual ~FittedClassifier() = default;

  virtual std::string kind() const = 0;
  /// Series length the model was fitted on.
  virtual std::size_t series_length() const = 0;
  std::uint64_t fit_seed() const noexcept { return fit_seed_; }

  /// Positive-class score in [0, 1]; label is 1 iff score >= 0.5.
  double predict_score(const TimeSeries& series) const;
  double predict_score(const Vector& values) const;
  int predict(const TimeSeries& series) const;
  int predict(const Vector& values) const;

  /// Batch scoring; overridden by models with a cheaper batched path.
  std::vector<double> predict_scores(const Dataset& data) const;
  std::vector<int> predict_labels(const Dataset& data) const;

 protected:
  explicit FittedClassifier(std::uint64_t fit_seed) : fit_seed_(fit_seed) {}

  virtual double score_one(const Vector& values) const = 0;
  /// Default loops over score_one; inputs are already length-checked.
  virtual std::vector<double> score_many(const Dataset& data) const;

 private:
  void check_length(Index n) const;
  std::uint64_t fit_seed_;
};

inline int label_from_score(double score) noexcept { return score >= 0.5 ? 1 : 0; }

}  // namespace adbench
