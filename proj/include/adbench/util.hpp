#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

namespace adbench {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent RNG streams.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a, 64 bit.
constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// RNG stream for unit `index` of a computation seeded with `seed`. Streams are
/// independent of scheduling, so results do not depend on the thread count.
inline Rng stream_rng(std::uint64_t seed, std::uint64_t index) {
  return Rng(mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL)));
}

inline Rng stream_rng(std::uint64_t seed, std::string_view key) { return stream_rng(seed, fnv1a(key)); }

/// Global worker count used by parallel_for (default 1).
void set_num_threads(int n);
int num_threads() noexcept;

/// Runs body(i) for i in [0, n). Each index is processed exactly once; bodies must
/// write only to index-owned state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

enum class LogLevel { quiet = 0, warning = 1, info = 2 };
void set_log_level(LogLevel level);
void log_warning(std::string_view message);
void log_info(std::string_view message);

}  // namespace adbench
