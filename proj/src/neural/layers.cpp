#include "adbench/neural/layers.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace adbench::neural {

Matrix fan_in_uniform(Index rows, Index cols, Index fan_in, Rng& rng) {
  const double a = 1.0 / std::sqrt(double(fan_in));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

// --- Conv1d -----------------------------------------------------------------------

namespace {

// Row ci*k + j of `cols` holds channel ci shifted by j - pad_left, zero outside.
void im2col(const Tensor3::ConstSampleMap& x, Index k, RowMatrix& cols) {
  const Index c = x.rows(), t = x.cols(), pad = (k - 1) / 2;
  cols.setZero(c * k, t);
  for (Index ci = 0; ci < c; ++ci)
    for (Index j = 0; j < k; ++j) {
      const Index shift = j - pad;
      const Index lo = std::max<Index>(0, -shift), hi = std::min<Index>(t, t - shift);
      if (hi > lo) cols.row(ci * k + j).segment(lo, hi - lo) = x.row(ci).segment(lo + shift, hi - lo);
    }
}

void col2im(const RowMatrix& cols, Index k, Tensor3::SampleMap dx) {
  const Index c = dx.rows(), t = dx.cols(), pad = (k - 1) / 2;
  for (Index ci = 0; ci < c; ++ci)
    for (Index j = 0; j < k; ++j) {
      const Index shift = j - pad;
      const Index lo = std::max<Index>(0, -shift), hi = std::min<Index>(t, t - shift);
      if (hi > lo) dx.row(ci).segment(lo + shift, hi - lo) += cols.row(ci * k + j).segment(lo, hi - lo);
    }
}

}  // namespace

Conv1d::Conv1d(Index in_channels, Index out_channels, Index kernel, bool bias, Rng& rng)
    : in_(in_channels), out_(out_channels), k_(kernel), has_bias_(bias) {
  if (in_ < 1 || out_ < 1 || k_ < 1) throw ValidationError("conv1d: channels and kernel must be >= 1");
  weight_ = Param(fan_in_uniform(out_, in_ * k_, in_ * k_, rng));
  if (has_bias_) bias_ = Param(fan_in_uniform(out_, 1, in_ * k_, rng));
}

Tensor3 Conv1d::infer(const Tensor3& x) const {
  if (x.channels() != in_)
    throw DimensionError("conv1d: expected " + std::to_string(in_) + " input channels, got " +
                         std::to_string(x.channels()));
  Tensor3 y(x.batch(), out_, x.time());
  RowMatrix cols;
  for (Index b = 0; b < x.batch(); ++b) {
    auto yb = y.sample(b);
    if (k_ == 1) {
      yb.noalias() = weight_.value * x.sample(b);
    } else {
      im2col(x.sample(b), k_, cols);
      yb.noalias() = weight_.value * cols;
    }
    if (has_bias_) yb.colwise() += bias_.value.col(0);
  }
  return y;
}

Tensor3 Conv1d::forward(const Tensor3& x) {
  Tensor3 y = infer(x);
  input_ = x;
  return y;
}

Tensor3 Conv1d::backward(const Tensor3& dy) {
  const Tensor3& x = input_;
  if (dy.batch() != x.batch() || dy.channels() != out_ || dy.time() != x.time())
    throw DimensionError("conv1d: gradient shape mismatch");
  Tensor3 dx(x.batch(), in_, x.time());
  RowMatrix cols, dcols;
  for (Index b = 0; b < x.batch(); ++b) {
    const auto dyb = dy.sample(b);
    if (has_bias_) bias_.grad.col(0) += dyb.rowwise().sum();
    if (k_ == 1) {
      weight_.grad.noalias() += dyb * x.sample(b).transpose();
      dx.sample(b).noalias() = weight_.value.transpose() * dyb;
    } else {
      im2col(x.sample(b), k_, cols);
      weight_.grad.noalias() += dyb * cols.transpose();
      dcols.noalias() = weight_.value.transpose() * dyb;
      col2im(dcols, k_, dx.sample(b));
    }
  }
  return dx;
}

void Conv1d::collect(std::vector<Param*>& params, std::vector<Vector*>&) {
  params.push_back(&weight_);
  if (has_bias_) params.push_back(&bias_);
}

// --- BatchNorm1d ------------------------------------------------------------------

BatchNorm1d::BatchNorm1d(Index channels)
    : c_(channels),
      gamma_(Matrix::Ones(channels, 1)),
      beta_(Matrix::Zero(channels, 1)),
      running_mean_(Vector::Zero(channels)),
      running_var_(Vector::Ones(channels)) {}

Tensor3 BatchNorm1d::forward(const Tensor3& x) {
  if (x.channels() != c_) throw DimensionError("batchnorm1d: channel mismatch");
  if (x.batch() < 2) throw ValidationError("batchnorm1d: batch of 1 in train mode");
  const double n = double(x.batch() * x.time());
  Vector mean = Vector::Zero(c_), var = Vector::Zero(c_);
  for (Index b = 0; b < x.batch(); ++b) mean += x.sample(b).rowwise().sum();
  mean /= n;
  for (Index b = 0; b < x.batch(); ++b) var += (x.sample(b).colwise() - mean).array().square().matrix().rowwise().sum();
  var /= n;
  inv_std_ = (var.array() + kEps).rsqrt();
  xhat_ = Tensor3(x.batch(), c_, x.time());
  Tensor3 y(x.batch(), c_, x.time());
  for (Index b = 0; b < x.batch(); ++b) {
    xhat_.sample(b) = (x.sample(b).colwise() - mean).array().colwise() * inv_std_.array();
    y.sample(b) = (xhat_.sample(b).array().colwise() * gamma_.value.col(0).array()).colwise() +
                  beta_.value.col(0).array();
  }
  running_mean_ = (1 - kMomentum) * running_mean_ + kMomentum * mean;
  running_var_ = (1 - kMomentum) * running_var_ + kMomentum * var * (n / (n - 1));
  return y;
}

Tensor3 BatchNorm1d::infer(const Tensor3& x) const {
  if (x.channels() != c_) throw DimensionError("batchnorm1d: channel mismatch");
  const Vector scale = gamma_.value.col(0).array() * (running_var_.array() + kEps).rsqrt();
  const Vector shift = beta_.value.col(0) - scale.cwiseProduct(running_mean_);
  Tensor3 y(x.batch(), c_, x.time());
  for (Index b = 0; b < x.batch(); ++b)
    y.sample(b) = (x.sample(b).array().colwise() * scale.array()).colwise() + shift.array();
  return y;
}

Tensor3 BatchNorm1d::backward(const Tensor3& dy) {
  if (!dy.same_shape(xhat_)) throw DimensionError("batchnorm1d: gradient shape mismatch");
  const double n = double(dy.batch() * dy.time());
  Vector sum_dy = Vector::Zero(c_), sum_dy_xhat = Vector::Zero(c_);
  for (Index b = 0; b < dy.batch(); ++b) {
    sum_dy += dy.sample(b).rowwise().sum();
    sum_dy_xhat += dy.sample(b).cwiseProduct(xhat_.sample(b)).rowwise().sum();
  }
  gamma_.grad.col(0) += sum_dy_xhat;
  beta_.grad.col(0) += sum_dy;
  const Vector k = gamma_.value.col(0).cwiseProduct(inv_std_) / n;
  Tensor3 dx(dy.batch(), c_, dy.time());
  for (Index b = 0; b < dy.batch(); ++b) {
    auto t = (n * dy.sample(b).array()).colwise() - sum_dy.array();
    dx.sample(b) = (t - xhat_.sample(b).array().colwise() * sum_dy_xhat.array()).colwise() * k.array();
  }
  return dx;
}

void BatchNorm1d::collect(std::vector<Param*>& params, std::vector<Vector*>& buffers) {
  params.push_back(&gamma_);
  params.push_back(&beta_);
  buffers.push_back(&running_mean_);
  buffers.push_back(&running_var_);
}

// --- ReLU / MaxPool ---------------------------------------------------------------

Tensor3 ReLU::infer(const Tensor3& x) const {
  Tensor3 y = x;
  y.flat() = y.flat().cwiseMax(0.0);
  return y;
}

Tensor3 ReLU::forward(const Tensor3& x) {
  output_ = infer(x);
  return output_;
}

Tensor3 ReLU::backward(const Tensor3& dy) {
  if (!dy.same_shape(output_)) throw DimensionError("relu: gradient shape mismatch");
  Tensor3 dx = dy;
  dx.flat() = (output_.flat().array() > 0).select(dy.flat(), 0.0);
  return dx;
}

Tensor3 MaxPool1d::pool(const Tensor3& x, std::vector<Index>* argmax) const {
  const Index t = x.time(), pad = (k_ - 1) / 2;
  Tensor3 y(x.batch(), x.channels(), t);
  if (argmax) argmax->assign(std::size_t(y.size()), 0);
  const double* in = x.flat().data();
  double* out = y.flat().data();
  for (Index row = 0; row < x.batch() * x.channels(); ++row) {
    const double* r = in + row * t;
    for (Index i = 0; i < t; ++i) {
      const Index lo = std::max<Index>(0, i - pad), hi = std::min<Index>(t, i - pad + k_);
      Index best = lo;
      for (Index j = lo + 1; j < hi; ++j)
        if (r[j] > r[best]) best = j;
      out[row * t + i] = r[best];
      if (argmax) (*argmax)[std::size_t(row * t + i)] = row * t + best;
    }
  }
  return y;
}

Tensor3 MaxPool1d::infer(const Tensor3& x) const { return pool(x, nullptr); }

Tensor3 MaxPool1d::forward(const Tensor3& x) { return pool(x, &argmax_); }

Tensor3 MaxPool1d::backward(const Tensor3& dy) {
  if (argmax_.size() != std::size_t(dy.size())) throw DimensionError("maxpool1d: gradient shape mismatch");
  Tensor3 dx(dy.batch(), dy.channels(), dy.time());
  for (std::size_t i = 0; i < argmax_.size(); ++i) dx.flat()[argmax_[i]] += dy.flat()[Index(i)];
  return dx;
}

// --- containers -------------------------------------------------------------------

Tensor3 Sequential::forward(const Tensor3& x) {
  Tensor3 h = x;
  for (auto& l : layers_) h = l->forward(h);
  return h;
}

Tensor3 Sequential::infer(const Tensor3& x) const {
  Tensor3 h = x;
  for (const auto& l : layers_) h = l->infer(h);
  return h;
}

Tensor3 Sequential::backward(const Tensor3& dy) {
  Tensor3 g = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Sequential::collect(std::vector<Param*>& params, std::vector<Vector*>& buffers) {
  for (auto& l : layers_) l->collect(params, buffers);
}

Residual::Residual(std::unique_ptr<Module> main, std::unique_ptr<Module> shortcut)
    : main_(std::move(main)), shortcut_(std::move(shortcut)) {}

Tensor3 Residual::forward(const Tensor3& x) {
  Tensor3 z = main_->forward(x);
  const Tensor3 s = shortcut_ ? shortcut_->forward(x) : x;
  if (!z.same_shape(s)) throw DimensionError("residual: branch shapes differ");
  z.flat() = (z.flat() + s.flat()).cwiseMax(0.0);
  output_ = z;
  return z;
}

Tensor3 Residual::infer(const Tensor3& x) const {
  Tensor3 z = main_->infer(x);
  const Tensor3 s = shortcut_ ? shortcut_->infer(x) : x;
  if (!z.same_shape(s)) throw DimensionError("residual: branch shapes differ");
  z.flat() = (z.flat() + s.flat()).cwiseMax(0.0);
  return z;
}

Tensor3 Residual::backward(const Tensor3& dy) {
  Tensor3 dz = dy;
  dz.flat() = (output_.flat().array() > 0).select(dy.flat(), 0.0);
  Tensor3 dx = main_->backward(dz);
  dx.flat() += shortcut_ ? shortcut_->backward(dz).flat() : dz.flat();
  return dx;
}

void Residual::collect(std::vector<Param*>& params, std::vector<Vector*>& buffers) {
  main_->collect(params, buffers);
  if (shortcut_) shortcut_->collect(params, buffers);
}

// --- Inception --------------------------------------------------------------------

InceptionModule::InceptionModule(Index in_channels, Rng& rng) : pool_(3), bn_(out_channels()) {
  // Univariate input skips the bottleneck.
  Index branch_in = in_channels;
  if (in_channels > 1) {
    bottleneck_ = std::make_unique<Conv1d>(in_channels, kBottleneck, 1, false, rng);
    branch_in = kBottleneck;
  }
  for (Index k : {10, 20, 40}) branches_.push_back(std::make_unique<Conv1d>(branch_in, kFilters, k, false, rng));
  pool_conv_ = std::make_unique<Conv1d>(in_channels, kFilters, 1, false, rng);
}

template <class Self, class Call>
Tensor3 InceptionModule::pass(Self& self, const Tensor3& x, Call call) {
  const Tensor3 u = self.bottleneck_ ? call(*self.bottleneck_, x) : x;
  Tensor3 cat(x.batch(), out_channels(), x.time());
  auto place = [&](const Tensor3& part, Index slot) {
    for (Index b = 0; b < x.batch(); ++b) cat.sample(b).middleRows(slot * kFilters, kFilters) = part.sample(b);
  };
  for (std::size_t i = 0; i < self.branches_.size(); ++i) place(call(*self.branches_[i], u), Index(i));
  place(call(*self.pool_conv_, call(self.pool_, x)), 3);
  return call(self.bn_, call(self.relu_, cat));
}

Tensor3 InceptionModule::forward(const Tensor3& x) {
  return pass(*this, x, [](Module& m, const Tensor3& in) { return m.forward(in); });
}

Tensor3 InceptionModule::infer(const Tensor3& x) const {
  return pass(*this, x, [](const Module& m, const Tensor3& in) { return m.infer(in); });
}

Tensor3 InceptionModule::backward(const Tensor3& dy) {
  const Tensor3 dcat = relu_.backward(bn_.backward(dy));
  auto slice = [&](Index slot) {
    Tensor3 part(dcat.batch(), kFilters, dcat.time());
    for (Index b = 0; b < dcat.batch(); ++b) part.sample(b) = dcat.sample(b).middleRows(slot * kFilters, kFilters);
    return part;
  };
  Tensor3 du = branches_[0]->backward(slice(0));
  for (std::size_t i = 1; i < branches_.size(); ++i) du.flat() += branches_[i]->backward(slice(Index(i))).flat();
  Tensor3 dx = bottleneck_ ? bottleneck_->backward(du) : du;
  dx.flat() += pool_.backward(pool_conv_->backward(slice(3))).flat();
  return dx;
}

void InceptionModule::collect(std::vector<Param*>& params, std::vector<Vector*>& buffers) {
  if (bottleneck_) bottleneck_->collect(params, buffers);
  for (auto& b : branches_) b->collect(params, buffers);
  pool_conv_->collect(params, buffers);
  bn_.collect(params, buffers);
}

// --- head ---------------------------------------------------------------------------

Matrix gap(const Tensor3& x) {
  Matrix out(x.batch(), x.channels());
  for (Index b = 0; b < x.batch(); ++b) out.row(b) = x.sample(b).rowwise().mean().transpose();
  return out;
}

Tensor3 gap_backward(const Matrix& dy, Index time) {
  Tensor3 dx(dy.rows(), dy.cols(), time);
  for (Index b = 0; b < dy.rows(); ++b)
    dx.sample(b) = (dy.row(b).transpose() / double(time)).replicate(1, time);
  return dx;
}

Linear::Linear(Index in, Index out, Rng& rng)
    : weight_(fan_in_uniform(out, in, in, rng)), bias_(fan_in_uniform(out, 1, in, rng)) {}

Matrix Linear::infer(const Matrix& x) const {
  if (x.cols() != weight_.value.cols()) throw DimensionError("linear: input width mismatch");
  Matrix y = x * weight_.value.transpose();
  y.rowwise() += bias_.value.col(0).transpose();
  return y;
}

Matrix Linear::forward(const Matrix& x) {
  input_ = x;
  return infer(x);
}

Matrix Linear::backward(const Matrix& dy) {
  weight_.grad.noalias() += dy.transpose() * input_;
  bias_.grad.col(0) += dy.colwise().sum().transpose();
  return dy * weight_.value;
}

void Linear::collect(std::vector<Param*>& params) {
  params.push_back(&weight_);
  params.push_back(&bias_);
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

LossAndGrad softmax_ce(const Matrix& logits, std::span<const int> labels) {
  if (std::size_t(logits.rows()) != labels.size()) throw DimensionError("softmax_ce: batch and labels disagree");
  if (!logits.allFinite()) throw ValidationError("softmax_ce: non-finite logits");
  const double n = double(logits.rows());
  LossAndGrad out{0.0, Matrix(logits.rows(), logits.cols())};
  for (Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[std::size_t(i)];
    if (y < 0 || y >= logits.cols()) throw ValidationError("softmax_ce: label out of range");
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.loss += lse - logits(i, y);
    out.grad.row(i) = (logits.row(i).array() - lse).exp();
    out.grad(i, y) -= 1.0;
  }
  out.loss /= n;
  out.grad /= n;
  return out;
}

}  // namespace adbench::neural
