#include "adbench/classic/interval.hpp"

#include "adbench/util.hpp"

#include <unsupported/Eigen/FFT>

#include <random>

namespace adbench::classic {

Vector rise_interval_features(const Vector& series, Interval iv) {
  if (iv.start < 0 || iv.end > series.size() || iv.start >= iv.end)
    throw ValidationError("rise_interval_features: interval out of range");
  const Index len = iv.length();
  if (len < kRiseMinInterval)
    throw ValidationError("rise_interval_features: interval shorter than " + std::to_string(kRiseMinInterval));
  const Vector seg = series.segment(iv.start, len);

  Eigen::FFT<double> fft;
  Eigen::VectorXcd spectrum;
  fft.fwd(spectrum, seg);
  const Index n_ps = len / 2;
  const Index n_acf = std::min<Index>(100, len / 4);
  Vector out(n_ps + n_acf);
  for (Index k = 0; k < n_ps; ++k) out[k] = std::norm(spectrum[k]);

  for (Index lag = 1; lag <= n_acf; ++lag) {
    const Index m = len - lag;
    const auto x = seg.head(m), y = seg.tail(m);
    const double mx = x.mean(), my = y.mean();
    const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
    const double sxx = (x.array() - mx).square().sum();
    const double syy = (y.array() - my).square().sum();
    out[n_ps + lag - 1] = (sxx > 0 && syy > 0) ? sxy / std::sqrt(sxx * syy) : 0.0;
  }
  return out;
}

IntervalForest::IntervalForest(Features features, std::vector<Member> members, std::size_t length,
                               std::uint64_t seed)
    : FittedClassifier(seed), features_(features), members_(std::move(members)), length_(length) {}

Vector IntervalForest::member_features(Features kind, const Vector& series, const std::vector<Interval>& intervals) {
  if (kind == Features::tsf) {
    Vector f(3 * Index(intervals.size()));
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      const auto s = tsf_interval_features(series, intervals[i]);
      f.segment<3>(3 * Index(i)) << s.mean, s.std, s.slope;
    }
    return f;
  }
  return rise_interval_features(series, intervals.front());
}

double IntervalForest::score_one(const Vector& values) const {
  double votes = 0;
  for (const auto& m : members_) votes += m.tree.vote(member_features(features_, values, m.intervals));
  return votes / double(members_.size());
}

std::vector<double> IntervalForest::score_many(const Dataset& data) const {
  std::vector<double> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) { out[i] = score_one(data[i].values); });
  return out;
}

namespace {

std::size_t check_train(const Dataset& train, const char* who, std::size_t min_length) {
  if (train.empty()) throw ValidationError(std::string(who) + ": empty training set");
  const auto length = train.front().size();
  for (const auto& d : train)
    if (d.size() != length) throw DimensionError(std::string(who) + ": training series differ in length");
  if (length < min_length)
    throw ValidationError(std::string(who) + ": series length " + std::to_string(length) + " below minimum " +
                          std::to_string(min_length));
  return length;
}

std::unique_ptr<IntervalForest> fit_forest(const Dataset& train, IntervalForest::Features kind, int n_trees,
                                           std::uint64_t seed,
                                           const std::function<std::vector<Interval>(std::size_t, Rng&)>& draw) {
  const auto length = train.front().size();
  const auto labels = labels_of(train);
  std::vector<IntervalForest::Member> members(static_cast<std::size_t>(n_trees));
  parallel_for(members.size(), [&](std::size_t t) {
    auto rng = stream_rng(seed, t);
    auto intervals = draw(t, rng);
    Matrix x;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const Vector f = IntervalForest::member_features(kind, train[i].values, intervals);
      if (i == 0) x.resize(Index(train.size()), f.size());
      x.row(Index(i)) = f.transpose();
    }
    members[t] = {std::move(intervals), DecisionTree::fit(x, labels)};
  });
  return std::make_unique<IntervalForest>(kind, std::move(members), length, seed);
}

}  // namespace

std::unique_ptr<IntervalForest> fit_tsf(const Dataset& train, TsfParams params, std::uint64_t seed) {
  const auto length = Index(check_train(train, "tsf", 3));
  if (params.n_trees < 1) throw ValidationError("tsf: n_trees must be >= 1");
  const int min_len = std::max(1, std::min<int>(params.min_interval, int(length)));
  const int r = params.intervals_per_tree > 0 ? params.intervals_per_tree
                                              : std::max(1, int(std::floor(std::sqrt(double(length)))));
  return fit_forest(train, IntervalForest::Features::tsf, params.n_trees, seed, [&](std::size_t, Rng& rng) {
    std::vector<Interval> out;
    std::uniform_int_distribution<Index> start_dist(0, length - min_len);
    for (int i = 0; i < r; ++i) {
      const Index s = start_dist(rng);
      std::uniform_int_distribution<Index> len_dist(min_len, length - s);
      out.push_back({s, s + len_dist(rng)});
    }
    return out;
  });
}

std::unique_ptr<IntervalForest> fit_rise(const Dataset& train, RiseParams params, std::uint64_t seed) {
  const auto length = Index(check_train(train, "rise", kRiseMinInterval));
  if (params.n_trees < 1) throw ValidationError("rise: n_trees must be >= 1");
  const int max_pow = int(std::floor(std::log2(double(length))));
  return fit_forest(train, IntervalForest::Features::rise, params.n_trees, seed, [&](std::size_t t, Rng& rng) {
    if (t == 0) return std::vector<Interval>{{0, length}};
    // Power-of-two interval lengths keep the transform radix-2.
    std::uniform_int_distribution<int> pow_dist(4, max_pow);
    const Index len = Index(1) << pow_dist(rng);
    std::uniform_int_distribution<Index> start_dist(0, length - len);
    const Index s = start_dist(rng);
    return std::vector<Interval>{{s, s + len}};
  });
}

}  // namespace adbench::classic
