#include "adbench/kernel/ridge.hpp"

#include "adbench/binary_io.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace adbench::kernel {

std::vector<double> default_ridge_alphas() {
  std::vector<double> out;
  for (int i = 0; i < 10; ++i) out.push_back(std::pow(10.0, -3.0 + 6.0 * double(i) / 9.0));
  return out;
}

namespace {

// Spectral form of the ridge problem: whichever Gram matrix is smaller.
struct RidgeSpectrum {
  bool dual;
  Vector eigenvalues;
  Matrix eigenvectors;
  Vector projected;  // Q^T y (dual) or V^T X^T y (primal)
};

RidgeSpectrum spectrum(const Matrix& x, const Vector& y) {
  RidgeSpectrum s;
  s.dual = x.rows() <= x.cols();
  Matrix gram = s.dual ? Matrix(x * x.transpose()) : Matrix(x.transpose() * x);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw std::runtime_error("ridge: eigendecomposition failed");
  s.eigenvalues = eig.eigenvalues().cwiseMax(0.0);
  s.eigenvectors = eig.eigenvectors();
  s.projected = s.dual ? Vector(s.eigenvectors.transpose() * y) : Vector(s.eigenvectors.transpose() * (x.transpose() * y));
  return s;
}

Vector weights_at(const Matrix& x, const RidgeSpectrum& s, double lambda) {
  const Vector scaled = s.projected.cwiseQuotient((s.eigenvalues.array() + lambda).matrix());
  const Vector coef = s.eigenvectors * scaled;
  return s.dual ? Vector(x.transpose() * coef) : coef;
}

}  // namespace

Vector ridge_solve(const Matrix& x, const Vector& y, double lambda) {
  if (x.rows() != y.size()) throw DimensionError("ridge_solve: rows and targets disagree");
  if (!(lambda > 0)) throw ValidationError("ridge_solve: lambda must be positive");
  return weights_at(x, spectrum(x, y), lambda);
}

RidgeModel RidgeModel::fit(const Matrix& features, std::span<const int> labels, const std::vector<double>& alphas) {
  const Index n = features.rows();
  if (n < 2 || std::size_t(n) != labels.size()) throw ValidationError("ridge: need >= 2 labeled instances");
  if (!features.allFinite()) throw ValidationError("ridge: non-finite features");
  if (alphas.empty()) throw ValidationError("ridge: empty alpha grid");
  Vector y(n);
  int pos = 0;
  for (Index i = 0; i < n; ++i) {
    y[i] = labels[std::size_t(i)] == 1 ? 1.0 : -1.0;
    pos += labels[std::size_t(i)] == 1;
  }
  if (pos == 0 || pos == n) throw ValidationError("ridge: labels contain a single class");

  RidgeModel m;
  m.n_columns_ = features.cols();
  const Vector mean = features.colwise().mean();
  std::vector<double> means, scales;
  for (Index c = 0; c < features.cols(); ++c) {
    const double sd = std::sqrt((features.col(c).array() - mean[c]).square().sum() / double(n));
    if (sd > 1e-12 * std::max(1.0, std::abs(mean[c]))) {
      m.keep_.push_back(c);
      means.push_back(mean[c]);
      scales.push_back(sd);
    }
  }
  const auto k = Index(m.keep_.size());
  m.mean_ = Eigen::Map<const Vector>(means.data(), k);
  m.scale_ = Eigen::Map<const Vector>(scales.data(), k);
  m.intercept_ = y.mean();
  if (k == 0) {
    m.weights_ = Vector();
    m.lambda_ = alphas.front();
    return m;
  }
  Matrix xs(n, k);
  for (Index j = 0; j < k; ++j) xs.col(j) = (features.col(m.keep_[std::size_t(j)]).array() - m.mean_[j]) / m.scale_[j];
  const Vector yc = y.array() - m.intercept_;

  const auto s = spectrum(xs, yc);
  double best = std::numeric_limits<double>::infinity();
  for (double lambda : alphas) {
    // Fitted values and hat-matrix trace from the spectrum.
    const Vector shrink = s.eigenvalues.cwiseQuotient((s.eigenvalues.array() + lambda).matrix());
    const double df = shrink.sum() + 1.0;  // +1 for the intercept
    Vector fitted;
    if (s.dual) fitted = s.eigenvectors * shrink.cwiseProduct(s.projected);
    else fitted = xs * weights_at(xs, s, lambda);
    const double rss = (yc - fitted).squaredNorm();
    const double denom = 1.0 - df / double(n);
    const double gcv = denom > 0 ? rss / double(n) / (denom * denom) : std::numeric_limits<double>::infinity();
    m.gcv_.push_back(gcv);
    if (gcv < best) {
      best = gcv;
      m.lambda_ = lambda;
    }
  }
  if (!std::isfinite(best)) m.lambda_ = alphas.back();
  m.weights_ = weights_at(xs, s, m.lambda_);
  return m;
}

void RidgeModel::save(std::ostream& out) const {
  write_pod<std::uint64_t>(out, std::uint64_t(n_columns_));
  write_pod<std::uint64_t>(out, keep_.size());
  for (Index c : keep_) write_pod<std::uint64_t>(out, std::uint64_t(c));
  write_vector(out, mean_);
  write_vector(out, scale_);
  write_vector(out, weights_);
  write_pod(out, intercept_);
  write_pod(out, lambda_);
}

RidgeModel RidgeModel::load(std::istream& in) {
  RidgeModel m;
  m.n_columns_ = Index(read_pod<std::uint64_t>(in));
  const auto k = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < k; ++i) m.keep_.push_back(Index(read_pod<std::uint64_t>(in)));
  m.mean_ = read_vector(in, Index(k));
  m.scale_ = read_vector(in, Index(k));
  m.weights_ = read_vector(in, Index(k));
  m.intercept_ = read_pod<double>(in);
  m.lambda_ = read_pod<double>(in);
  return m;
}

}  // namespace adbench::kernel
