#pragma once

#include "adbench/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace adbench::classic {

template <class DerivedA, class DerivedB>
typename DerivedA::Scalar euclid_dist(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw DimensionError("euclid_dist: length mismatch");
  // Summed in index order, like the DTW recurrence, so a zero band reproduces it exactly.
  typename DerivedA::Scalar s = 0;
  for (Index i = 0; i < a.size(); ++i) {
    const auto d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Half-width of the Sakoe-Chiba band for lengths n, m; never narrower than |n - m|
/// so that a warping path always exists.
inline Index dtw_window(Index n, Index m, std::optional<double> band) {
  const Index longest = std::max(n, m);
  if (!band) return longest;
  return std::max<Index>(static_cast<Index>(std::floor(*band * double(longest))), std::abs(n - m));
}

/// DTW with squared point cost and the standard match/insert/delete step pattern;
/// returns the square root of the accumulated cost. `band` is a fraction of the
/// longer length, or none for unconstrained warping. If the accumulated cost of a
/// full row exceeds `abandon_above` (squared scale), returns +inf early.
template <class DerivedA, class DerivedB>
typename DerivedA::Scalar dtw_dist(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                                   std::optional<double> band = std::nullopt,
                                   typename DerivedA::Scalar abandon_above =
                                       std::numeric_limits<typename DerivedA::Scalar>::infinity()) {
  using Scalar = typename DerivedA::Scalar;
  const Index n = a.size(), m = b.size();
  if (n == 0 || m == 0) throw ValidationError("dtw_dist: empty series");
  if (band && (*band < 0.0 || *band > 1.0)) throw ValidationError("dtw_dist: band must lie in [0, 1]");
  const Index w = dtw_window(n, m, band);
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();

  // Two rolling rows over j in [0, m], column 0 is the border.
  std::vector<Scalar> prev(static_cast<std::size_t>(m + 1), inf), cur(static_cast<std::size_t>(m + 1), inf);
  prev[0] = 0;
  for (Index i = 1; i <= n; ++i) {
    std::fill(cur.begin(), cur.end(), inf);
    const Index lo = std::max<Index>(1, i - w), hi = std::min<Index>(m, i + w);
    Scalar row_min = inf;
    const Scalar ai = a[i - 1];
    for (Index j = lo; j <= hi; ++j) {
      const Scalar d = ai - b[j - 1];
      const Scalar best = std::min(prev[std::size_t(j - 1)], std::min(prev[std::size_t(j)], cur[std::size_t(j - 1)]));
      cur[std::size_t(j)] = d * d + best;
      row_min = std::min(row_min, cur[std::size_t(j)]);
    }
    if (row_min > abandon_above) return inf;
    std::swap(prev, cur);
  }
  return std::sqrt(prev[std::size_t(m)]);
}

}  // namespace adbench::classic
