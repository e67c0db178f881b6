#pragma once

#include "adbench/core.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace adbench::kernel {

/// log-spaced 10^-3 .. 10^3, 10 values.
std::vector<double> default_ridge_alphas();

/// Ridge weights for already standardized features: solves (X^T X + lambda I) w = X^T y
/// through an eigendecomposition of the smaller Gram matrix.
Vector ridge_solve(const Matrix& x, const Vector& y, double lambda);

/// Ridge classifier on +-1 targets with per-column standardization (train statistics,
/// zero-variance columns dropped) and lambda chosen by generalized cross-validation.
class RidgeModel {
 public:
  static RidgeModel fit(const Matrix& features, std::span<const int> labels,
                        const std::vector<double>& alphas = default_ridge_alphas());

  template <class Derived>
  double margin(const Eigen::MatrixBase<Derived>& row) const {
    double m = intercept_;
    for (std::size_t k = 0; k < keep_.size(); ++k) {
      const Index c = keep_[k];
      m += (row[c] - mean_[Index(k)]) / scale_[Index(k)] * weights_[Index(k)];
    }
    return m;
  }

  /// Logistic squashing of the margin; >= 0.5 iff margin >= 0.
  template <class Derived>
  double score(const Eigen::MatrixBase<Derived>& row) const {
    return 1.0 / (1.0 + std::exp(-margin(row)));
  }

  double lambda() const noexcept { return lambda_; }
  const Vector& weights() const noexcept { return weights_; }
  double intercept() const noexcept { return intercept_; }
  Index input_columns() const noexcept { return n_columns_; }
  const std::vector<Index>& kept_columns() const noexcept { return keep_; }
  /// GCV score per candidate alpha, in input order.
  const std::vector<double>& gcv_scores() const noexcept { return gcv_; }

  void save(std::ostream& out) const;
  static RidgeModel load(std::istream& in);

 private:
  Index n_columns_ = 0;
  std::vector<Index> keep_;
  Vector mean_, scale_, weights_;
  double intercept_ = 0;
  double lambda_ = 0;
  std::vector<double> gcv_;
};

}  // namespace adbench::kernel
