#pragma once

#include "adbench/core.hpp"

namespace adbench::neural {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense (batch, channels, time) tensor, time fastest. Each sample is viewable as a
/// row-major channels x time matrix.
class Tensor3 {
 public:
  using SampleMap = Eigen::Map<RowMatrix>;
  using ConstSampleMap = Eigen::Map<const RowMatrix>;

  Tensor3() = default;
  Tensor3(Index batch, Index channels, Index time, double fill = 0.0)
      : n_(batch), c_(channels), t_(time), data_(Vector::Constant(batch * channels * time, fill)) {
    if (batch < 1 || channels < 1 || time < 1) throw DimensionError("Tensor3: shape components must be >= 1");
  }

  Index batch() const noexcept { return n_; }
  Index channels() const noexcept { return c_; }
  Index time() const noexcept { return t_; }
  Index size() const noexcept { return data_.size(); }

  double& operator()(Index b, Index c, Index t) { return data_[(b * c_ + c) * t_ + t]; }
  double operator()(Index b, Index c, Index t) const { return data_[(b * c_ + c) * t_ + t]; }

  SampleMap sample(Index b) { return SampleMap(data_.data() + b * c_ * t_, c_, t_); }
  ConstSampleMap sample(Index b) const { return ConstSampleMap(data_.data() + b * c_ * t_, c_, t_); }

  Vector& flat() noexcept { return data_; }
  const Vector& flat() const noexcept { return data_; }

  bool same_shape(const Tensor3& o) const noexcept { return n_ == o.n_ && c_ == o.c_ && t_ == o.t_; }

 private:
  Index n_ = 0, c_ = 0, t_ = 0;
  Vector data_;
};

}  // namespace adbench::neural
