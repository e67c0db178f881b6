#include "adbench/kernel/rocket.hpp"

#include "adbench/binary_io.hpp"
#include "adbench/util.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace adbench::kernel {

namespace {

Index common_length(const Dataset& data, const char* who) {
  if (data.empty()) throw ValidationError(std::string(who) + ": empty dataset");
  const auto n = Index(data.front().size());
  for (const auto& d : data)
    if (Index(d.size()) != n) throw DimensionError(std::string(who) + ": series differ in length");
  return n;
}

template <class Bank>
FeatureMatrix transform_rows(const Bank& bank, const Dataset& data, std::vector<FeatureKind> kinds) {
  FeatureMatrix fm{Matrix(Index(data.size()), bank.feature_count()), std::move(kinds)};
  parallel_for(data.size(), [&](std::size_t i) { fm.values.row(Index(i)) = bank.transform_one(data[i].values).transpose(); });
  return fm;
}

}  // namespace

// --- ROCKET -------------------------------------------------------------------

RocketBank::RocketBank(std::vector<RandomKernel> kernels, Index series_length, bool normalize)
    : kernels_(std::move(kernels)), length_(series_length), normalize_(normalize) {}

RocketBank RocketBank::generate(Index series_length, int n_kernels, std::uint64_t seed, bool normalize) {
  if (series_length < 8) throw ValidationError("rocket: series length " + std::to_string(series_length) + " below 8");
  if (n_kernels < 1) throw ValidationError("rocket: n_kernels must be >= 1");
  auto rng = stream_rng(seed, "rocket");
  std::uniform_int_distribution<int> length_pick(0, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> bias_dist(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<RandomKernel> kernels;
  kernels.reserve(std::size_t(n_kernels));
  for (int i = 0; i < n_kernels; ++i) {
    static constexpr Index kLengths[] = {7, 9, 11};
    RandomKernel k;
    const Index len = kLengths[length_pick(rng)];
    k.weights.resize(len);
    for (Index j = 0; j < len; ++j) k.weights[j] = normal(rng);
    k.weights.array() -= k.weights.mean();
    k.bias = bias_dist(rng);
    const double max_exp = std::max(0.0, std::log2(double(series_length - 1) / double(len - 1)));
    std::uniform_real_distribution<double> exp_dist(0.0, max_exp);
    k.dilation = std::max<Index>(1, Index(std::pow(2.0, exp_dist(rng))));
    k.padded = coin(rng);
    // A kernel longer than the series only fits with padding.
    if (k.output_length(series_length) < 1) k.padded = true;
    kernels.push_back(std::move(k));
  }
  return RocketBank(std::move(kernels), series_length, normalize);
}

Vector RocketBank::transform_one(const Vector& series) const {
  if (series.size() != length_) throw DimensionError("rocket: series length mismatch");
  Vector x = series;
  if (normalize_) {
    const double mean = x.mean();
    const double sd = std::sqrt((x.array() - mean).square().mean());
    x = (x.array() - mean) / (sd + 1e-8);
  }
  Vector f(feature_count());
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    const auto r = apply_kernel(x, kernels_[i]);
    f[2 * Index(i)] = r.ppv;
    f[2 * Index(i) + 1] = r.max;
  }
  return f;
}

FeatureMatrix RocketBank::transform(const Dataset& data) const {
  std::vector<FeatureKind> kinds;
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    kinds.push_back(FeatureKind::ppv);
    kinds.push_back(FeatureKind::max);
  }
  return transform_rows(*this, data, std::move(kinds));
}

void RocketBank::save(std::ostream& out) const {
  write_pod<std::uint64_t>(out, std::uint64_t(length_));
  write_pod<std::uint8_t>(out, normalize_);
  write_pod<std::uint64_t>(out, kernels_.size());
  for (const auto& k : kernels_) {
    write_pod<std::uint32_t>(out, std::uint32_t(k.length()));
    write_pod<std::uint64_t>(out, std::uint64_t(k.dilation));
    write_pod<std::uint8_t>(out, k.padded);
    write_pod(out, k.bias);
    write_vector(out, k.weights);
  }
}

RocketBank RocketBank::load(std::istream& in) {
  const auto length = Index(read_pod<std::uint64_t>(in));
  const bool normalize = read_pod<std::uint8_t>(in) != 0;
  const auto n = read_pod<std::uint64_t>(in);
  if (n > (1u << 24)) throw ValidationError("rocket: implausible kernel count in model file");
  std::vector<RandomKernel> kernels(n);
  for (auto& k : kernels) {
    const auto len = Index(read_pod<std::uint32_t>(in));
    k.dilation = Index(read_pod<std::uint64_t>(in));
    k.padded = read_pod<std::uint8_t>(in) != 0;
    k.bias = read_pod<double>(in);
    k.weights = read_vector(in, len);
  }
  return RocketBank(std::move(kernels), length, normalize);
}

FeatureMatrix rocket_transform(const Dataset& data, int n_kernels, std::uint64_t seed) {
  return RocketBank::generate(common_length(data, "rocket"), n_kernels, seed).transform(data);
}

// --- MiniRocket ---------------------------------------------------------------

const std::array<std::array<int, 3>, MiniRocketBank::kKernels>& MiniRocketBank::kernel_indices() {
  static const auto table = [] {
    std::array<std::array<int, 3>, kKernels> t{};
    std::size_t n = 0;
    for (int a = 0; a < kLength; ++a)
      for (int b = a + 1; b < kLength; ++b)
        for (int c = b + 1; c < kLength; ++c) t[n++] = {a, b, c};
    return t;
  }();
  return table;
}

Eigen::Matrix<double, MiniRocketBank::kLength, 1> MiniRocketBank::kernel_weights(int kernel) {
  Eigen::Matrix<double, kLength, 1> w = Eigen::Matrix<double, kLength, 1>::Constant(-1.0);
  for (int j : kernel_indices().at(std::size_t(kernel))) w[j] = 2.0;
  return w;
}

std::vector<double> golden_quantiles(std::size_t n) {
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = std::fmod(double(i + 1) * std::numbers::phi, 1.0);
  return q;
}

double linear_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("linear_quantile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = q * double(values.size() - 1);
  const auto lo = std::size_t(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (values[hi] - values[lo]) * (pos - double(lo));
}

namespace {

// Convolution outputs of all 84 kernels at one dilation share structure: every kernel is
// -sum(taps) + 3 * (three selected taps). Output t sees input t + (j - 4) * dilation.
class DilatedTaps {
 public:
  DilatedTaps(const Vector& x, Index dilation) : alpha_(Vector::Zero(x.size())), gamma_(MiniRocketBank::kLength, x.size()) {
    const Index n = x.size();
    gamma_.setZero();
    for (Index j = 0; j < MiniRocketBank::kLength; ++j) {
      const Index shift = (j - MiniRocketBank::kLength / 2) * dilation;
      const Index lo = std::max<Index>(0, -shift);
      const Index hi = std::min<Index>(n, n - shift);
      if (hi <= lo) continue;
      alpha_.segment(lo, hi - lo) -= x.segment(lo + shift, hi - lo);
      gamma_.row(j).segment(lo, hi - lo) = 3.0 * x.segment(lo + shift, hi - lo).transpose();
    }
  }

  void output(int kernel, Vector& c) const {
    const auto& idx = MiniRocketBank::kernel_indices()[std::size_t(kernel)];
    c = alpha_ + gamma_.row(idx[0]).transpose() + gamma_.row(idx[1]).transpose() + gamma_.row(idx[2]).transpose();
  }

 private:
  Vector alpha_;
  Matrix gamma_;
};

}  // namespace

MiniRocketBank MiniRocketBank::fit(const Dataset& train, std::uint64_t seed, int n_features, int max_dilations) {
  const Index n = common_length(train, "minirocket");
  if (n < 10) throw ValidationError("minirocket: series length " + std::to_string(n) + " below 10");
  if (n_features < kKernels) throw ValidationError("minirocket: need at least 84 features");
  if (max_dilations < 1) throw ValidationError("minirocket: max_dilations must be >= 1");

  MiniRocketBank bank;
  bank.length_ = n;
  const int per_kernel = n_features / kKernels;
  const int true_max = std::min(per_kernel, max_dilations);
  const double multiplier = double(per_kernel) / double(true_max);
  const double max_exp = std::log2(double(n - 1) / double(kLength - 1));
  std::vector<int> counts;
  for (int i = 0; i < true_max; ++i) {
    const double e = true_max == 1 ? 0.0 : max_exp * double(i) / double(true_max - 1);
    const auto d = Index(std::floor(std::pow(2.0, e)));
    if (!bank.dilations_.empty() && bank.dilations_.back() == d) ++counts.back();
    else {
      bank.dilations_.push_back(d);
      counts.push_back(1);
    }
  }
  int assigned = 0;
  for (int c : counts) {
    bank.features_per_dilation_.push_back(int(double(c) * multiplier));
    assigned += bank.features_per_dilation_.back();
  }
  for (std::size_t i = 0; assigned < per_kernel; i = (i + 1) % counts.size(), ++assigned)
    ++bank.features_per_dilation_[i];

  const auto quantiles = golden_quantiles(std::size_t(per_kernel) * kKernels);
  bank.biases_.resize(Index(quantiles.size()));
  auto rng = stream_rng(seed, "minirocket");
  std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
  Index f = 0;
  Vector c;
  for (std::size_t di = 0; di < bank.dilations_.size(); ++di) {
    for (int k = 0; k < kKernels; ++k) {
      const DilatedTaps taps(train[pick(rng)].values, bank.dilations_[di]);
      taps.output(k, c);
      std::vector<double> sorted(c.data(), c.data() + c.size());
      std::sort(sorted.begin(), sorted.end());
      for (int q = 0; q < bank.features_per_dilation_[di]; ++q, ++f) {
        const double pos = quantiles[std::size_t(f)] * double(sorted.size() - 1);
        const auto lo = std::size_t(pos);
        const auto hi = std::min(lo + 1, sorted.size() - 1);
        bank.biases_[f] = sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - double(lo));
      }
    }
  }
  return bank;
}

Vector MiniRocketBank::transform_one(const Vector& series) const {
  if (series.size() != length_) throw DimensionError("minirocket: series length mismatch");
  Vector out(feature_count());
  Vector c;
  Index f = 0;
  for (std::size_t di = 0; di < dilations_.size(); ++di) {
    const DilatedTaps taps(series, dilations_[di]);
    const Index pad = (kLength / 2) * dilations_[di];
    for (int k = 0; k < kKernels; ++k) {
      taps.output(k, c);
      // Alternate between the full output and the unpadded interior.
      const bool interior = (di + std::size_t(k)) % 2 == 1;
      const Index lo = interior ? pad : 0;
      const Index len = interior ? c.size() - 2 * pad : c.size();
      const auto view = c.segment(lo, len);
      for (int q = 0; q < features_per_dilation_[di]; ++q, ++f)
        out[f] = double((view.array() > biases_[f]).count()) / double(len);
    }
  }
  return out;
}

FeatureMatrix MiniRocketBank::transform(const Dataset& data) const {
  return transform_rows(*this, data, std::vector<FeatureKind>(std::size_t(feature_count()), FeatureKind::ppv));
}

void MiniRocketBank::save(std::ostream& out) const {
  write_pod<std::uint64_t>(out, std::uint64_t(length_));
  write_pod<std::uint64_t>(out, dilations_.size());
  for (std::size_t i = 0; i < dilations_.size(); ++i) {
    write_pod<std::uint64_t>(out, std::uint64_t(dilations_[i]));
    write_pod<std::uint32_t>(out, std::uint32_t(features_per_dilation_[i]));
  }
  write_pod<std::uint64_t>(out, std::uint64_t(biases_.size()));
  write_vector(out, biases_);
}

MiniRocketBank MiniRocketBank::load(std::istream& in) {
  MiniRocketBank bank;
  bank.length_ = Index(read_pod<std::uint64_t>(in));
  const auto nd = read_pod<std::uint64_t>(in);
  if (nd > 4096) throw ValidationError("minirocket: implausible dilation count in model file");
  for (std::uint64_t i = 0; i < nd; ++i) {
    bank.dilations_.push_back(Index(read_pod<std::uint64_t>(in)));
    bank.features_per_dilation_.push_back(int(read_pod<std::uint32_t>(in)));
  }
  bank.biases_ = read_vector(in, Index(read_pod<std::uint64_t>(in)));
  return bank;
}

FeatureMatrix minirocket_transform(const Dataset& train, const Dataset& data, std::uint64_t seed) {
  return MiniRocketBank::fit(train, seed).transform(data);
}

// --- classifiers ----------------------------------------------------------------

RocketVariant parse_rocket_variant(std::string_view s) {
  if (s == "rocket") return RocketVariant::rocket;
  if (s == "minirocket") return RocketVariant::minirocket;
  if (s == "arsenal") return RocketVariant::arsenal;
  throw ValidationError("unknown rocket variant: " + std::string(s));
}

std::string to_string(RocketVariant v) {
  switch (v) {
    case RocketVariant::rocket: return "rocket";
    case RocketVariant::minirocket: return "minirocket";
    case RocketVariant::arsenal: return "arsenal";
  }
  return "?";
}

RocketClassifier::RocketClassifier(RocketBank bank, RidgeModel ridge, std::uint64_t seed)
    : FittedClassifier(seed), variant_(RocketVariant::rocket), rocket_(std::move(bank)), ridge_(std::move(ridge)) {}

RocketClassifier::RocketClassifier(MiniRocketBank bank, RidgeModel ridge, std::uint64_t seed)
    : FittedClassifier(seed), variant_(RocketVariant::minirocket), minirocket_(std::move(bank)), ridge_(std::move(ridge)) {}

std::size_t RocketClassifier::series_length() const {
  return std::size_t(variant_ == RocketVariant::rocket ? rocket_.series_length() : minirocket_.series_length());
}

Vector RocketClassifier::features(const Vector& values) const {
  return variant_ == RocketVariant::rocket ? rocket_.transform_one(values) : minirocket_.transform_one(values);
}

double RocketClassifier::score_one(const Vector& values) const { return ridge_.score(features(values)); }

std::vector<double> RocketClassifier::score_many(const Dataset& data) const {
  std::vector<double> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) { out[i] = score_one(data[i].values); });
  return out;
}

ArsenalClassifier::ArsenalClassifier(std::vector<Member> members, std::uint64_t seed)
    : FittedClassifier(seed), members_(std::move(members)) {
  if (members_.empty()) throw ValidationError("arsenal: no members");
}

std::size_t ArsenalClassifier::series_length() const { return std::size_t(members_.front().bank.series_length()); }

double ArsenalClassifier::score_one(const Vector& values) const {
  int votes = 0;
  for (const auto& m : members_) votes += m.ridge.margin(m.bank.transform_one(values)) >= 0;
  return double(votes) / double(members_.size());
}

double ArsenalClassifier::mean_member_score(const Vector& values) const {
  double s = 0;
  for (const auto& m : members_) s += m.ridge.score(m.bank.transform_one(values));
  return s / double(members_.size());
}

std::vector<double> ArsenalClassifier::score_many(const Dataset& data) const {
  std::vector<double> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) { out[i] = score_one(data[i].values); });
  return out;
}

std::unique_ptr<FittedClassifier> fit_rocket_family(const Dataset& train, RocketVariant variant, std::uint64_t seed,
                                                    const RocketFamilyParams& params) {
  const Index n = common_length(train, to_string(variant).c_str());
  const auto labels = labels_of(train);
  switch (variant) {
    case RocketVariant::rocket: {
      auto bank = RocketBank::generate(n, params.n_kernels, seed);
      auto ridge = RidgeModel::fit(bank.transform(train).values, labels);
      return std::make_unique<RocketClassifier>(std::move(bank), std::move(ridge), seed);
    }
    case RocketVariant::minirocket: {
      auto bank = MiniRocketBank::fit(train, seed, params.minirocket_features);
      auto ridge = RidgeModel::fit(bank.transform(train).values, labels);
      return std::make_unique<RocketClassifier>(std::move(bank), std::move(ridge), seed);
    }
    case RocketVariant::arsenal: {
      if (params.arsenal_members < 1) throw ValidationError("arsenal: members must be >= 1");
      std::vector<ArsenalClassifier::Member> members;
      for (int m = 0; m < params.arsenal_members; ++m) {
        const std::uint64_t member_seed = stream_rng(seed, "arsenal/" + std::to_string(m))();
        auto bank = RocketBank::generate(n, params.arsenal_kernels, member_seed);
        auto ridge = RidgeModel::fit(bank.transform(train).values, labels);
        members.push_back({std::move(bank), std::move(ridge)});
      }
      return std::make_unique<ArsenalClassifier>(std::move(members), seed);
    }
  }
  throw ValidationError("unknown rocket variant");
}

namespace {
constexpr std::string_view kMagic = "ADBKRNL1";
}

void save_kernel_model(const FittedClassifier& model, std::ostream& out) {
  write_magic(out, kMagic);
  if (const auto* r = dynamic_cast<const RocketClassifier*>(&model)) {
    write_pod<std::uint32_t>(out, std::uint32_t(r->variant()));
    write_pod<std::uint64_t>(out, r->fit_seed());
    if (r->variant() == RocketVariant::rocket) r->rocket_bank().save(out);
    else r->minirocket_bank().save(out);
    r->ridge().save(out);
  } else if (const auto* a = dynamic_cast<const ArsenalClassifier*>(&model)) {
    write_pod<std::uint32_t>(out, std::uint32_t(RocketVariant::arsenal));
    write_pod<std::uint64_t>(out, a->fit_seed());
    write_pod<std::uint64_t>(out, a->member_count());
    for (std::size_t i = 0; i < a->member_count(); ++i) {
      a->member(i).bank.save(out);
      a->member(i).ridge.save(out);
    }
  } else {
    throw ValidationError("save_kernel_model: not a kernel model (" + model.kind() + ")");
  }
  if (!out) throw std::runtime_error("save_kernel_model: write failed");
}

std::unique_ptr<FittedClassifier> load_kernel_model(std::istream& in) {
  expect_magic(in, kMagic);
  const auto variant = read_pod<std::uint32_t>(in);
  const auto seed = read_pod<std::uint64_t>(in);
  switch (RocketVariant(variant)) {
    case RocketVariant::rocket: {
      auto bank = RocketBank::load(in);
      return std::make_unique<RocketClassifier>(std::move(bank), RidgeModel::load(in), seed);
    }
    case RocketVariant::minirocket: {
      auto bank = MiniRocketBank::load(in);
      return std::make_unique<RocketClassifier>(std::move(bank), RidgeModel::load(in), seed);
    }
    case RocketVariant::arsenal: {
      const auto n = read_pod<std::uint64_t>(in);
      if (n == 0 || n > 100000) throw ValidationError("arsenal: implausible member count in model file");
      std::vector<ArsenalClassifier::Member> members;
      for (std::uint64_t i = 0; i < n; ++i) {
        auto bank = RocketBank::load(in);
        members.push_back({std::move(bank), RidgeModel::load(in)});
      }
      return std::make_unique<ArsenalClassifier>(std::move(members), seed);
    }
  }
  throw ValidationError("load_kernel_model: unknown variant " + std::to_string(variant));
}

}  // namespace adbench::kernel
