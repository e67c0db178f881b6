#pragma once

#include "adbench/core.hpp"
#include "adbench/kernel/ridge.hpp"

#include <array>
#include <iosfwd>
#include <limits>
#include <memory>
#include <vector>

namespace adbench::kernel {

struct RandomKernel {
  Vector weights;
  double bias = 0;
  Index dilation = 1;
  bool padded = false;

  Index length() const noexcept { return weights.size(); }
  /// Zeros added on each side: half the dilated span when padded.
  Index padding() const noexcept { return padded ? (length() - 1) * dilation / 2 : 0; }
  /// Number of convolution outputs on a series of length n (may be <= 0).
  Index output_length(Index n) const noexcept { return n + 2 * padding() - (length() - 1) * dilation; }
};

struct KernelResponse {
  double ppv;
  double max;
};

/// Dilated convolution plus bias at stride 1 over the zero-padded series.
/// ppv counts outputs strictly above zero.
template <class Derived>
KernelResponse apply_kernel(const Eigen::MatrixBase<Derived>& series, const RandomKernel& k) {
  const Index n = series.size();
  const Index out_len = k.output_length(n);
  if (k.length() < 1 || k.dilation < 1) throw ValidationError("apply_kernel: malformed kernel");
  if (out_len < 1) throw ValidationError("apply_kernel: kernel too long for input");
  const Index pad = k.padding();
  // Tap-major accumulation keeps the per-output summation order of the naive loop
  // (bias, then taps in order) while letting each tap run as a contiguous axpy.
  thread_local Vector out;
  out.setConstant(out_len, k.bias);
  for (Index j = 0; j < k.length(); ++j) {
    const Index shift = j * k.dilation - pad;  // input index = output index + shift
    const Index lo = std::max<Index>(0, -shift);
    const Index hi = std::min<Index>(out_len, n - shift);
    if (hi > lo) out.segment(lo, hi - lo) += k.weights[j] * series.segment(lo + shift, hi - lo);
  }
  Index positive = 0;
  for (Index i = 0; i < out_len; ++i) positive += out[i] > 0;
  return {double(positive) / double(out_len), out.maxCoeff()};
}

enum class FeatureKind { ppv, max };

struct FeatureMatrix {
  Matrix values;  // rows = instances
  std::vector<FeatureKind> kinds;
};

/// ROCKET kernel bank: random length, weights, bias, dilation and padding.
class RocketBank {
 public:
  RocketBank() = default;
  RocketBank(std::vector<RandomKernel> kernels, Index series_length, bool normalize);

  /// Samples `n_kernels` kernels for series of length `series_length` (>= 8).
  static RocketBank generate(Index series_length, int n_kernels, std::uint64_t seed, bool normalize = true);

  const std::vector<RandomKernel>& kernels() const noexcept { return kernels_; }
  Index series_length() const noexcept { return length_; }
  bool normalizes_input() const noexcept { return normalize_; }
  Index feature_count() const noexcept { return 2 * Index(kernels_.size()); }

  /// (ppv, max) per kernel, interleaved.
  Vector transform_one(const Vector& series) const;
  FeatureMatrix transform(const Dataset& data) const;

  void save(std::ostream& out) const;
  static RocketBank load(std::istream& in);

 private:
  std::vector<RandomKernel> kernels_;
  Index length_ = 0;
  bool normalize_ = true;
};

FeatureMatrix rocket_transform(const Dataset& data, int n_kernels = 10000, std::uint64_t seed = 1);

/// MiniRocket: 84 fixed length-9 kernels (weights -1, with three taps at 2), several
/// dilations, biases from training-output quantiles, ppv features only.
class MiniRocketBank {
 public:
  static constexpr int kKernels = 84;
  static constexpr int kLength = 9;

  /// Tap positions carrying weight 2, in lexicographic order of combinations.
  static const std::array<std::array<int, 3>, kKernels>& kernel_indices();
  static Eigen::Matrix<double, kLength, 1> kernel_weights(int kernel);

  static MiniRocketBank fit(const Dataset& train, std::uint64_t seed, int n_features = 10000,
                            int max_dilations = 32);

  Index series_length() const noexcept { return length_; }
  const std::vector<Index>& dilations() const noexcept { return dilations_; }
  const std::vector<int>& features_per_dilation() const noexcept { return features_per_dilation_; }
  const Vector& biases() const noexcept { return biases_; }
  Index feature_count() const noexcept { return biases_.size(); }

  Vector transform_one(const Vector& series) const;
  FeatureMatrix transform(const Dataset& data) const;

  void save(std::ostream& out) const;
  static MiniRocketBank load(std::istream& in);

 private:
  Index length_ = 0;
  std::vector<Index> dilations_;
  std::vector<int> features_per_dilation_;
  Vector biases_;
};

FeatureMatrix minirocket_transform(const Dataset& train, const Dataset& data, std::uint64_t seed = 1);

/// `(i * golden_ratio) mod 1` for i = 1..n.
std::vector<double> golden_quantiles(std::size_t n);

/// Linear-interpolation quantile of unsorted data (numpy's default method).
double linear_quantile(std::vector<double> values, double q);

enum class RocketVariant { rocket, minirocket, arsenal };
RocketVariant parse_rocket_variant(std::string_view s);
std::string to_string(RocketVariant v);

struct RocketFamilyParams {
  int n_kernels = 10000;
  int minirocket_features = 10000;
  int arsenal_members = 25;
  int arsenal_kernels = 2000;
};

class RocketClassifier final : public FittedClassifier {
 public:
  RocketClassifier(RocketBank bank, RidgeModel ridge, std::uint64_t seed);
  RocketClassifier(MiniRocketBank bank, RidgeModel ridge, std::uint64_t seed);

  std::string kind() const override { return to_string(variant_); }
  std::size_t series_length() const override;
  RocketVariant variant() const noexcept { return variant_; }
  const RocketBank& rocket_bank() const noexcept { return rocket_; }
  const MiniRocketBank& minirocket_bank() const noexcept { return minirocket_; }
  const RidgeModel& ridge() const noexcept { return ridge_; }

  Vector features(const Vector& values) const;

 protected:
  double score_one(const Vector& values) const override;
  std::vector<double> score_many(const Dataset& data) const override;

 private:
  RocketVariant variant_;
  RocketBank rocket_;
  MiniRocketBank minirocket_;
  RidgeModel ridge_;
};

/// Ensemble of small ROCKET classifiers; the score is the fraction of members voting
/// positive, so the label is the majority vote.
class ArsenalClassifier final : public FittedClassifier {
 public:
  struct Member {
    RocketBank bank;
    RidgeModel ridge;
  };

  ArsenalClassifier(std::vector<Member> members, std::uint64_t seed);

  std::string kind() const override { return "arsenal"; }
  std::size_t series_length() const override;
  std::size_t member_count() const noexcept { return members_.size(); }
  const Member& member(std::size_t i) const { return members_.at(i); }
  /// Mean of the members' logistic scores.
  double mean_member_score(const Vector& values) const;

 protected:
  double score_one(const Vector& values) const override;
  std::vector<double> score_many(const Dataset& data) const override;

 private:
  std::vector<Member> members_;
};

std::unique_ptr<FittedClassifier> fit_rocket_family(const Dataset& train, RocketVariant variant,
                                                    std::uint64_t seed = 1, const RocketFamilyParams& params = {});

/// Binary record: magic, variant, fit seed, kernel table(s), ridge weights.
void save_kernel_model(const FittedClassifier& model, std::ostream& out);
std::unique_ptr<FittedClassifier> load_kernel_model(std::istream& in);

}  // namespace adbench::kernel
