#pragma once

#include "adbench/core.hpp"

#include <memory>
#include <optional>

namespace adbench::classic {

enum class Metric { euclid, dtw };

struct KnnParams {
  Metric metric = Metric::euclid;
  int k = 1;
  /// Sakoe-Chiba band as a fraction of the series length (DTW only); none = unconstrained.
  std::optional<double> band = 0.1;
};

/// Lazy nearest-neighbour model. With k = 1 the score is the neighbour's label,
/// ties going to the smaller training index; with k > 1 it is the positive fraction.
class KnnClassifier final : public FittedClassifier {
 public:
  KnnClassifier(Dataset train, KnnParams params);

  std::string kind() const override;
  std::size_t series_length() const override { return length_; }
  std::size_t train_size() const noexcept { return train_.size(); }

  /// Index of the nearest training instance (first minimum).
  std::size_t nearest(const Vector& query) const;

 protected:
  double score_one(const Vector& values) const override;
  std::vector<double> score_many(const Dataset& data) const override;

 private:
  double distance(const Vector& a, const Vector& b, double abandon) const;

  Dataset train_;
  KnnParams params_;
  std::size_t length_;
};

std::unique_ptr<KnnClassifier> fit_knn(const Dataset& train, KnnParams params = {});

}  // namespace adbench::classic
