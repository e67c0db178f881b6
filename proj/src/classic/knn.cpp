#include "adbench/classic/knn.hpp"

#include "adbench/classic/distance.hpp"
#include "adbench/util.hpp"

#include <numeric>

namespace adbench::classic {

KnnClassifier::KnnClassifier(Dataset train, KnnParams params)
    : FittedClassifier(0), train_(std::move(train)), params_(params) {
  if (train_.empty()) throw ValidationError("knn: empty training set");
  if (params_.k < 1) throw ValidationError("knn: k must be >= 1");
  length_ = train_.front().size();
  for (const auto& d : train_)
    if (d.size() != length_) throw DimensionError("knn: training series differ in length");
}

std::string KnnClassifier::kind() const {
  return params_.metric == Metric::euclid ? "knn-euclid" : "knn-dtw";
}

double KnnClassifier::distance(const Vector& a, const Vector& b, double abandon) const {
  if (params_.metric == Metric::euclid) return (a - b).squaredNorm();
  const double d = dtw_dist(a, b, params_.band, abandon);
  return d * d;
}

std::size_t KnnClassifier::nearest(const Vector& query) const {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < train_.size(); ++i) {
    const double d = distance(query, train_[i].values, best);
    if (d < best) {
      best = d;
      best_i = i;
    }
  }
  return best_i;
}

double KnnClassifier::score_one(const Vector& values) const {
  if (params_.k == 1) return train_[nearest(values)].label;
  std::vector<double> d(train_.size());
  for (std::size_t i = 0; i < train_.size(); ++i)
    d[i] = distance(values, train_[i].values, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> idx(train_.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto k = std::min<std::size_t>(std::size_t(params_.k), idx.size());
  std::partial_sort(idx.begin(), idx.begin() + long(k), idx.end(),
                    [&](auto x, auto y) { return d[x] < d[y] || (d[x] == d[y] && x < y); });
  double pos = 0;
  for (std::size_t i = 0; i < k; ++i) pos += train_[idx[i]].label;
  return pos / double(k);
}

std::vector<double> KnnClassifier::score_many(const Dataset& data) const {
  std::vector<double> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) { out[i] = score_one(data[i].values); });
  return out;
}

std::unique_ptr<KnnClassifier> fit_knn(const Dataset& train, KnnParams params) {
  return std::make_unique<KnnClassifier>(train, params);
}

}  // namespace adbench::classic
