#include "adbench/eval.hpp"

#include "adbench/core.hpp"

namespace adbench::eval {

namespace {
double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
}  // namespace

Confusion confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size())
    throw DimensionError("confusion: y_true and y_pred lengths differ");
  Confusion c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1))
      throw ValidationError("confusion: labels must be 0 or 1");
    if (t == 1 && p == 1) ++c.tp;
    else if (t == 0 && p == 1) ++c.fp;
    else if (t == 1 && p == 0) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ClassScores class_scores(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassScores s;
  s.precision = safe_ratio(double(tp), double(tp + fp));
  s.recall = safe_ratio(double(tp), double(tp + fn));
  s.f1 = safe_ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
  return s;
}

std::pair<double, double> f1_per_class(const Confusion& c) {
  // Class 0 as positive swaps the roles of FP and FN.
  return {class_scores(c.tp, c.fp, c.fn).f1, class_scores(c.tn, c.fn, c.fp).f1};
}

double macro_f1(const Confusion& c) {
  const auto [pos, neg] = f1_per_class(c);
  return (pos + neg) / 2.0;
}

double macro_f1(std::span<const int> y_true, std::span<const int> y_pred) {
  return macro_f1(confusion(y_true, y_pred));
}

EvalReport evaluate(std::span<const int> y_true, std::span<const int> y_pred, double train_time_s,
                    double infer_time_s) {
  EvalReport r;
  r.confusion = confusion(y_true, y_pred);
  r.positive = class_scores(r.confusion.tp, r.confusion.fp, r.confusion.fn);
  r.negative = class_scores(r.confusion.tn, r.confusion.fn, r.confusion.fp);
  r.macro_f1 = (r.positive.f1 + r.negative.f1) / 2.0;
  r.n_test = r.confusion.total();
  r.ib_ratio = safe_ratio(double(r.confusion.tp + r.confusion.fn), double(r.n_test));
  r.train_time_s = train_time_s;
  r.infer_time_s = infer_time_s;
  return r;
}

}  // namespace adbench::eval
