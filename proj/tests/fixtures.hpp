// Small in-memory datasets for unit tests.
#pragma once

#include "adbench/core.hpp"
#include "adbench/util.hpp"

#include <random>
#include <string>

namespace fixture {

using namespace adbench;

/// Positives carry a rectangular block of `height` at a random offset on top of a
/// noisy 100 W background; negatives are background only. Houses are assigned
/// round-robin so house-level splits work.
inline Dataset separable(std::size_t n, Index length, std::uint64_t seed, double height = 2000,
                         Index block = 6, std::size_t houses = 10) {
  auto rng = stream_rng(seed, "fixture");
  std::normal_distribution<double> noise(0.0, 5.0);
  std::uniform_int_distribution<Index> offset(0, length - block);
  Dataset out;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = int(i % 2);
    Vector v(length);
    for (Index t = 0; t < length; ++t) v[t] = std::max(0.0, 100.0 + noise(rng));
    if (label) v.segment(offset(rng), block).array() += height;
    out.push_back(make_instance(std::move(v), label, "block", "h" + std::to_string(i % houses)));
  }
  return out;
}

inline Vector random_vector(Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace fixture
