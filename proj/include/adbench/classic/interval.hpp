#pragma once

#include "adbench/classic/tree.hpp"
#include "adbench/core.hpp"

#include <cmath>
#include <memory>

namespace adbench::classic {

/// Half-open interval [start, end) of series positions.
struct Interval {
  Index start = 0;
  Index end = 0;
  Index length() const noexcept { return end - start; }
  bool operator==(const Interval&) const = default;
};

struct IntervalStats {
  double mean = 0;
  double std = 0;    // population
  double slope = 0;  // least squares over positions start..end-1
};

template <class Derived>
IntervalStats tsf_interval_features(const Eigen::MatrixBase<Derived>& series, Interval iv) {
  if (iv.start < 0 || iv.end > series.size() || iv.start >= iv.end)
    throw ValidationError("tsf_interval_features: empty or out-of-range interval");
  const auto seg = series.segment(iv.start, iv.length());
  const double n = double(iv.length());
  IntervalStats s;
  s.mean = seg.sum() / n;
  if (iv.length() == 1) return s;
  s.std = std::sqrt((seg.array() - s.mean).square().sum() / n);
  const double x_mean = (n - 1.0) / 2.0;
  double sxy = 0, sxx = 0;
  for (Index i = 0; i < iv.length(); ++i) {
    const double dx = double(i) - x_mean;
    sxy += dx * (seg[i] - s.mean);
    sxx += dx * dx;
  }
  s.slope = sxy / sxx;
  return s;
}

/// Power spectrum |X_k|^2 for k < floor(len/2), followed by the autocorrelation at
/// lags 1..min(100, len/4). The ACF at lag h is the Pearson correlation of the
/// lagged segments, 0 when either segment is constant.
Vector rise_interval_features(const Vector& series, Interval iv);

inline constexpr Index kRiseMinInterval = 16;

struct TsfParams {
  int n_trees = 200;
  /// Intervals per tree; 0 means floor(sqrt(T)).
  int intervals_per_tree = 0;
  int min_interval = 3;
};

struct RiseParams {
  int n_trees = 500;
};

/// Forest of CART trees, each over features from its own random intervals.
/// Score = fraction of trees voting positive.
class IntervalForest final : public FittedClassifier {
 public:
  enum class Features { tsf, rise };

  struct Member {
    std::vector<Interval> intervals;
    DecisionTree tree;
  };

  IntervalForest(Features features, std::vector<Member> members, std::size_t length, std::uint64_t seed);

  std::string kind() const override { return features_ == Features::tsf ? "tsf" : "rise"; }
  std::size_t series_length() const override { return length_; }
  std::size_t member_count() const noexcept { return members_.size(); }
  const Member& member(std::size_t i) const { return members_.at(i); }

  static Vector member_features(Features kind, const Vector& series, const std::vector<Interval>& intervals);

 protected:
  double score_one(const Vector& values) const override;
  std::vector<double> score_many(const Dataset& data) const override;

 private:
  Features features_;
  std::vector<Member> members_;
  std::size_t length_;
};

std::unique_ptr<IntervalForest> fit_tsf(const Dataset& train, TsfParams params = {}, std::uint64_t seed = 1);
std::unique_ptr<IntervalForest> fit_rise(const Dataset& train, RiseParams params = {}, std::uint64_t seed = 1);

}  // namespace adbench::classic
