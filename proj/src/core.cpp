#include "adbench/core.hpp"

#include <cmath>

namespace adbench {

TimeSeries::TimeSeries(Timestamp start, std::int64_t interval_s, std::vector<Reading> values,
                       std::string source_id)
    : start_(start), interval_s_(interval_s), values_(std::move(values)), source_id_(std::move(source_id)) {
  if (interval_s_ <= 0) throw ValidationError("TimeSeries: interval_s must be positive");
  if (values_.empty()) throw ValidationError("TimeSeries: empty series");
  for (const auto& v : values_) {
    if (v && (!std::isfinite(*v) || *v < 0.0))
      throw ValidationError("TimeSeries: readings must be finite and non-negative");
  }
}

TimeSeries TimeSeries::from_values(std::span<const double> values, std::int64_t interval_s,
                                   Timestamp start, std::string source_id) {
  std::vector<Reading> r(values.begin(), values.end());
  return TimeSeries(start, interval_s, std::move(r), std::move(source_id));
}

bool TimeSeries::has_missing() const noexcept {
  for (const auto& v : values_)
    if (!v) return true;
  return false;
}

std::size_t TimeSeries::missing_count() const noexcept {
  std::size_t n = 0;
  for (const auto& v : values_) n += v ? 0 : 1;
  return n;
}

Vector TimeSeries::dense() const {
  Vector out(static_cast<Index>(values_.size()));
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (!values_[j]) throw ValidationError("series has missing values");
    out[static_cast<Index>(j)] = *values_[j];
  }
  return out;
}

TimeSeries LabeledInstance::series() const {
  return TimeSeries::from_values(std::span<const double>(values.data(), values.size()), interval_s,
                                 start, source_id);
}

LabeledInstance make_instance(Vector values, int label, std::string case_id, std::string source_id,
                              Timestamp start, std::int64_t interval_s) {
  if (label != 0 && label != 1) throw ValidationError("label must be 0 or 1");
  if (values.size() == 0) throw ValidationError("instance has no values");
  if (!values.allFinite()) throw ValidationError("instance has non-finite values");
  return LabeledInstance{std::move(values), label, std::move(case_id), std::move(source_id), start,
                         interval_s};
}

std::vector<int> labels_of(const Dataset& data) {
  std::vector<int> y;
  y.reserve(data.size());
  for (const auto& d : data) y.push_back(d.label);
  return y;
}

void FittedClassifier::check_length(Index n) const {
  if (static_cast<std::size_t>(n) != series_length())
    throw DimensionError(kind() + ": expected series length " + std::to_string(series_length()) +
                         ", got " + std::to_string(n));
}

double FittedClassifier::predict_score(const TimeSeries& series) const {
  if (series.has_missing()) throw ValidationError(kind() + ": series has missing values");
  return predict_score(series.dense());
}

double FittedClassifier::predict_score(const Vector& values) const {
  check_length(values.size());
  if (!values.allFinite()) throw ValidationError(kind() + ": non-finite input");
  return score_one(values);
}

int FittedClassifier::predict(const TimeSeries& series) const {
  return label_from_score(predict_score(series));
}

int FittedClassifier::predict(const Vector& values) const {
  return label_from_score(predict_score(values));
}

std::vector<double> FittedClassifier::predict_scores(const Dataset& data) const {
  for (const auto& d : data) {
    check_length(d.values.size());
    if (!d.values.allFinite()) throw ValidationError(kind() + ": non-finite input");
  }
  return score_many(data);
}

std::vector<int> FittedClassifier::predict_labels(const Dataset& data) const {
  auto scores = predict_scores(data);
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = label_from_score(scores[i]);
  return out;
}

std::vector<double> FittedClassifier::score_many(const Dataset& data) const {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = score_one(data[i].values);
  return out;
}

}  // namespace adbench
