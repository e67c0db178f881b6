#pragma once

#include "adbench/core.hpp"

#include <cstring>
#include <istream>
#include <ostream>
#include <string_view>
#include <type_traits>

namespace adbench {

// Flat native-endian records for model persistence. Readers throw ValidationError
// on truncation or a foreign magic.

template <class T>
void write_pod(std::ostream& out, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  static_assert(std::is_trivially_copyable_v<T>);
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("model file truncated");
  return value;
}

template <class Derived>
void write_vector(std::ostream& out, const Eigen::DenseBase<Derived>& v) {
  const auto dense = v.eval();
  out.write(reinterpret_cast<const char*>(dense.data()), std::streamsize(sizeof(double) * dense.size()));
}

inline Vector read_vector(std::istream& in, Index n) {
  if (n < 0 || n > (Index(1) << 34)) throw ValidationError("model file: implausible vector size");
  Vector v(n);
  in.read(reinterpret_cast<char*>(v.data()), std::streamsize(sizeof(double) * n));
  if (!in) throw ValidationError("model file truncated");
  return v;
}

inline void write_magic(std::ostream& out, std::string_view magic) { out.write(magic.data(), std::streamsize(magic.size())); }

inline void expect_magic(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), std::streamsize(got.size()));
  if (!in || got != magic) throw ValidationError("model file: bad magic, expected " + std::string(magic));
}

}  // namespace adbench
