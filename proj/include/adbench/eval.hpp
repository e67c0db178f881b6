#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <type_traits>
#include <utility>

namespace adbench::eval {

/// Confusion counts with class 1 as the positive class.
struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const Confusion&) const = default;
};

struct ClassScores {
  double precision = 0, recall = 0, f1 = 0;
};

struct EvalReport {
  Confusion confusion;
  ClassScores positive;  // class 1
  ClassScores negative;  // class 0
  double macro_f1 = 0;
  std::size_t n_test = 0;
  double ib_ratio = 0;
  double train_time_s = 0;
  double infer_time_s = 0;
};

Confusion confusion(std::span<const int> y_true, std::span<const int> y_pred);

/// Precision/recall/F1 for one class; every 0/0 is defined as 0.
ClassScores class_scores(std::size_t tp, std::size_t fp, std::size_t fn);

/// (F1 of class 1, F1 of class 0).
std::pair<double, double> f1_per_class(const Confusion& c);

double macro_f1(const Confusion& c);
double macro_f1(std::span<const int> y_true, std::span<const int> y_pred);

EvalReport evaluate(std::span<const int> y_true, std::span<const int> y_pred, double train_time_s = 0,
                    double infer_time_s = 0);

/// Wall time of op() on a monotonic clock. Returns (result, seconds), or just the
/// seconds for void operations.
template <class Op>
auto timed(Op&& op) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  if constexpr (std::is_void_v<std::invoke_result_t<Op>>) {
    std::forward<Op>(op)();
    return std::chrono::duration<double>(Clock::now() - t0).count();
  } else {
    auto result = std::forward<Op>(op)();
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    return std::pair{std::move(result), s};
  }
}

}  // namespace adbench::eval
