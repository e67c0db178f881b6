#pragma once

#include "adbench/neural/tensor.hpp"
#include "adbench/util.hpp"

#include <memory>
#include <span>
#include <vector>

namespace adbench::neural {

/// Trainable tensor with its gradient (same shape). Vectors are n x 1.
struct Param {
  Matrix value;
  Matrix grad;

  explicit Param(Matrix v = {}) : value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}
};

/// Layer contract: forward() is the training path and caches what backward() needs;
/// infer() is the evaluation path and never mutates the layer.
class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor3 forward(const Tensor3& x) = 0;
  virtual Tensor3 infer(const Tensor3& x) const = 0;
  /// Accumulates parameter gradients and returns the input gradient.
  virtual Tensor3 backward(const Tensor3& dy) = 0;
  virtual void collect(std::vector<Param*>& params, std::vector<Vector*>& buffers) {
    (void)params;
    (void)buffers;
  }
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Matrix fan_in_uniform(Index rows, Index cols, Index fan_in, Rng& rng);

/// Stride-1 cross-correlation with "same" zero padding: (k-1)/2 on the left, the rest
/// on the right. Weights are (out, in*k), column ci*k + j.
class Conv1d final : public Module {
 public:
  Conv1d(Index in_channels, Index out_channels, Index kernel, bool bias, Rng& rng);

  Tensor3 forward(const Tensor3& x) override;
  Tensor3 infer(const Tensor3& x) const override;
  Tensor3 backward(const Tensor3& dy) override;
  void collect(std::vector<Param*>& params, std::vector<Vector*>& buffers) override;

  Index in_channels() const noexcept { return in_; }
  Index out_channels() const noexcept { return out_; }
  Index kernel() const noexcept { return k_; }
  bool has_bias() const noexcept { return has_bias_; }
  Param& weight() noexcept { return weight_; }
  Param& bias() noexcept { return bias_; }

 private:
  Index in_, out_, k_;
  bool has_bias_;
  Param weight_, bias_;
  Tensor3 input_;
};

class BatchNorm1d final : public Module {
 public:
  static constexpr double kMomentum = 0.1;
  static constexpr double kEps = 1e-5;

  explicit BatchNorm1d(Index channels);

  Tensor3 forward(const Tensor3& x) override;
  Tensor3 infer(const Tensor3& x) const override;
  Tensor3 backward(const Tensor3& dy) override;
  void collect(std::vector<Param*>& params, std::vector<Vector*>& buffers) override;

  Param& gamma() noexcept { return gamma_; }
  Param& beta() noexcept { return beta_; }
  const Vector& running_mean() const noexcept { return running_mean_; }
  const Vector& running_var() const noexcept { return running_var_; }

 private:
  Index c_;
  Param gamma_, beta_;
  Vector running_mean_, running_var_;
  Tensor3 xhat_;
  Vector inv_std_;
};

class ReLU final : public Module {
 public:
  Tensor3 forward(const Tensor3& x) override;
  Tensor3 infer(const Tensor3& x) const override;
  Tensor3 backward(const Tensor3& dy) override;

 private:
  Tensor3 output_;
};

/// Max over a window of 3 (generally k) with stride 1 and "same" padding.
class MaxPool1d final : public Module {
 public:
  explicit MaxPool1d(Index kernel = 3) : k_(kernel) {}

  Tensor3 forward(const Tensor3& x) override;
  Tensor3 infer(const Tensor3& x) const override;
  Tensor3 backward(const Tensor3& dy) override;

 private:
  Tensor3 pool(const Tensor3& x, std::vector<Index>* argmax) const;
  Index k_;
  std::vector<Index> argmax_;
  Index in_time_ = 0;
};

class Sequential final : public Module {
 public:
  Sequential() = default;
  Sequential& add(std::unique_ptr<Module> m) {
    layers_.push_back(std::move(m));
    return *this;
  }
  template <class M, class... Args>
  M& emplace(Args&&... args) {
    auto m = std::make_unique<M>(std::forward<Args>(args)...);
    M& ref = *m;
    layers_.push_back(std::move(m));
    return ref;
  }

  Tensor3 forward(const Tensor3& x) override;
  Tensor3 infer(const Tensor3& x) const override;
  Tensor3 backward(const Tensor3& dy) override;
  void collect(std::vector<Param*>& params, std::vector<Vector*>& buffers) override;

  std::size_t size() const noexcept { return layers_.size(); }
  Module& at(std::size_t i) { return *layers_.at(i); }

 private:
  std::vector<std::unique_ptr<Module>> layers_;
};

/// relu(main(x) + shortcut(x)); a null shortcut is the identity.
class Residual final : public Module {
 public:
  Residual(std::unique_ptr<Module> main, std::unique_ptr<Module> shortcut);

  Tensor3 forward(const Tensor3& x) override;
  Tensor3 infer(const Tensor3& x) const override;
  Tensor3 backward(const Tensor3& dy) override;
  void collect(std::vector<Param*>& params, std::vector<Vector*>& buffers) override;

  Module& main() noexcept { return *main_; }
  bool identity_shortcut() const noexcept { return !shortcut_; }

 private:
  std::unique_ptr<Module> main_, shortcut_;
  Tensor3 output_;
};

/// Parallel convolutions (k = 10, 20, 40) over an optional 1x1 bottleneck plus a
/// max-pool -> 1x1 conv branch, concatenated, then ReLU and batch normalization.
class InceptionModule final : public Module {
 public:
  static constexpr Index kFilters = 32;
  static constexpr Index kBottleneck = 32;

  InceptionModule(Index in_channels, Rng& rng);

  Tensor3 forward(const Tensor3& x) override;
  Tensor3 infer(const Tensor3& x) const override;
  Tensor3 backward(const Tensor3& dy) override;
  void collect(std::vector<Param*>& params, std::vector<Vector*>& buffers) override;

  static constexpr Index out_channels() { return 4 * kFilters; }
  bool has_bottleneck() const noexcept { return bool(bottleneck_); }

 private:
  template <class Self, class Call>
  static Tensor3 pass(Self& self, const Tensor3& x, Call call);

  std::unique_ptr<Conv1d> bottleneck_;
  std::vector<std::unique_ptr<Conv1d>> branches_;
  MaxPool1d pool_;
  std::unique_ptr<Conv1d> pool_conv_;
  ReLU relu_;
  BatchNorm1d bn_;
};

/// Mean over time: (batch, channels, time) -> batch x channels.
Matrix gap(const Tensor3& x);
Tensor3 gap_backward(const Matrix& dy, Index time);

/// Dense layer on batch x in rows.
class Linear {
 public:
  Linear(Index in, Index out, Rng& rng);
  Matrix forward(const Matrix& x);
  Matrix infer(const Matrix& x) const;
  Matrix backward(const Matrix& dy);
  void collect(std::vector<Param*>& params);

  Param& weight() noexcept { return weight_; }
  Param& bias() noexcept { return bias_; }

 private:
  Param weight_, bias_;
  Matrix input_;
};

struct LossAndGrad {
  double loss;
  Matrix grad;
};

/// Mean softmax cross-entropy over the batch (log-sum-exp stabilized); gradient is
/// (softmax - onehot) / batch.
LossAndGrad softmax_ce(const Matrix& logits, std::span<const int> labels);

/// Row-wise softmax.
Matrix softmax(const Matrix& logits);

}  // namespace adbench::neural
