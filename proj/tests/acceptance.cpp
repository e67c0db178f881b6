// End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero if any criterion fails.
#include "adbench/classic/distance.hpp"
#include "adbench/classic/interval.hpp"
#include "adbench/eval.hpp"
#include "adbench/harness/runner.hpp"
#include "adbench/kernel/ridge.hpp"
#include "adbench/kernel/rocket.hpp"
#include "adbench/neural/models.hpp"
#include "adbench/preprocess.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace adbench;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<double> metrics;  // compared bitwise across repeated runs

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = "failed: " + what + (detail.empty() ? "" : "; " + detail);
    pass = pass && ok;
  }
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s.setf(std::ios::scientific);
  s.precision(2);
  s << v;
  return s.str();
}

Vector random_vector(Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

// --- 1: metrics -------------------------------------------------------------------------

Outcome metric_oracles() {
  Outcome o;
  const std::vector<int> y1{1, 1, 0, 0}, p1{1, 0, 1, 0};
  const std::vector<int> y2{1, 0, 1}, y3{1, 0}, p3{1, 1};
  const double a = eval::macro_f1(y1, p1), b = eval::macro_f1(y2, y2), c = eval::macro_f1(y3, p3);
  o.require(a == 0.5, "macro_f1 example 0.5");
  o.require(b == 1.0, "macro_f1 example 1.0");
  o.require(std::abs(c - 1.0 / 3.0) <= 1e-15, "macro_f1 example 1/3");
  o.require(eval::confusion(y1, p1) == eval::Confusion{1, 1, 1, 1}, "confusion hand counts");
  o.require(eval::confusion(y3, p3) == eval::Confusion{1, 1, 0, 0}, "confusion hand counts");
  const auto zero = eval::class_scores(0, 0, 0);
  o.require(zero.precision == 0 && zero.recall == 0 && zero.f1 == 0, "0/0 convention");
  o.metrics = {a, b, c};

  Rng rng(1);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> len(1, 40);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> y(std::size_t(len(rng))), p(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = coin(rng);
      p[i] = coin(rng);
    }
    const double m = eval::macro_f1(y, p);
    mismatches += std::abs(m - oracle::macro_f1(y, p)) > 1e-14;
    o.metrics.push_back(m);
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " random macro F1 mismatches");
  o.detail = o.pass ? "examples exact, 1000 random pairs agree with the oracle" : o.detail;
  return o;
}

// --- 2: distances -----------------------------------------------------------------------

Outcome distance_oracles() {
  using classic::dtw_dist;
  using classic::euclid_dist;
  Outcome o;
  Rng rng(2);
  std::uniform_int_distribution<Index> len(1, 32);
  std::uniform_real_distribution<double> band(0.0, 1.0);
  int not_exact = 0, above_euclid = 0, band0 = 0, equal_len = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = len(rng), m = trial % 3 == 0 ? len(rng) : n;
    const Vector a = random_vector(n, rng), b = random_vector(m, rng);
    const double d = dtw_dist(a, b);
    not_exact += d != oracle::dtw_recursive(a, b, std::max(n, m));
    const double f = band(rng);
    not_exact += dtw_dist(a, b, f) != oracle::dtw_recursive(a, b, classic::dtw_window(n, m, f));
    o.metrics.push_back(d);
    if (n == m) {
      ++equal_len;
      above_euclid += d > euclid_dist(a, b);
      band0 += dtw_dist(a, b, 0.0) != euclid_dist(a, b);
    }
  }
  o.require(not_exact == 0, std::to_string(not_exact) + " DTW values differ from the recursion");
  o.require(above_euclid == 0, std::to_string(above_euclid) + " pairs with dtw > euclid");
  o.require(band0 == 0, std::to_string(band0) + " pairs with band 0 != euclid");
  if (o.pass)
    o.detail = "1000 pairs exact (2000 DTW evaluations), " + std::to_string(equal_len) + " equal-length pairs bounded";
  return o;
}

// --- 3: numerical transforms ------------------------------------------------------------

Outcome transform_oracles() {
  Outcome o;
  Rng rng(3);

  // Resampling against the bucket-mean loop.
  std::uniform_real_distribution<double> watts(0.0, 3000.0);
  std::bernoulli_distribution gap(0.01);
  int resample_bad = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Reading> v(1440);
    for (auto& x : v) x = gap(rng) ? Reading{} : Reading{watts(rng)};
    const TimeSeries s(0, 60, v);
    for (std::int64_t target : {600, 900, 1800}) {
      const auto got = preprocess::resample(s, target);
      resample_bad += got.values() != oracle::bucket_means(v, std::size_t(target / 60));
      for (const auto& r : got.values()) o.metrics.push_back(r ? *r : -1.0);
    }
  }
  o.require(resample_bad == 0, std::to_string(resample_bad) + " resampled series differ");

  // RISE power spectrum against the O(n^2) DFT.
  double dft_err = 0;
  for (Index len : {16, 17, 31, 48, 64, 100, 128, 250, 1000}) {
    const Vector x = random_vector(len, rng);
    const Vector f = classic::rise_interval_features(x, {0, len});
    const auto dft = oracle::naive_dft(x);
    double scale = 0;
    for (Index k = 0; k < len / 2; ++k) scale = std::max(scale, std::norm(dft[std::size_t(k)]));
    for (Index k = 0; k < len / 2; ++k) {
      const double expected = std::norm(dft[std::size_t(k)]);
      dft_err = std::max(dft_err, std::abs(f[k] - expected) / std::max(expected, 1e-3 * scale));
      o.metrics.push_back(f[k]);
    }
  }
  o.require(dft_err <= 1e-9, "RISE DFT relative error " + std::to_string(dft_err));

  // ROCKET convolution against nested loops.
  std::uniform_int_distribution<int> len_pick(0, 2), dil(1, 16);
  std::uniform_real_distribution<double> bias(-1, 1);
  std::bernoulli_distribution coin(0.5);
  double conv_err = 0;
  int ppv_bad = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const Vector x = random_vector(48 + trial % 100, rng);
    kernel::RandomKernel k;
    k.weights = random_vector(7 + 2 * len_pick(rng), rng);
    k.weights.array() -= k.weights.mean();
    k.bias = bias(rng);
    k.dilation = dil(rng);
    k.padded = coin(rng);
    if (k.output_length(x.size()) < 1) continue;
    const Vector expected = oracle::naive_conv(x, k.weights, k.bias, k.dilation, k.padding());
    const auto r = kernel::apply_kernel(x, k);
    conv_err = std::max(conv_err, std::abs(r.max - expected.maxCoeff()));
    ppv_bad += r.ppv != double((expected.array() > 0).count()) / double(expected.size());
    o.metrics.push_back(r.max);
    o.metrics.push_back(r.ppv);
  }
  o.require(conv_err <= 1e-12, "convolution abs error " + std::to_string(conv_err));
  o.require(ppv_bad == 0, std::to_string(ppv_bad) + " ppv mismatches");

  // Ridge against the normal equations.
  double ridge_err = 0;
  for (auto [n, p] : {std::pair<Index, Index>{30, 8}, {8, 30}, {25, 25}, {100, 400}, {400, 100}}) {
    Matrix x(n, p);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = random_vector(1, rng)[0];
    const Vector y = random_vector(n, rng);
    for (double lambda : kernel::default_ridge_alphas()) {
      const Vector w = kernel::ridge_solve(x, y, lambda);
      const Vector expected = oracle::ridge_normal_equations(x, y, lambda);
      ridge_err = std::max(ridge_err, (w - expected).norm() / expected.norm());
      o.metrics.push_back(w.norm());
    }
  }
  o.require(ridge_err <= 1e-8, "ridge relative error " + std::to_string(ridge_err));
  if (o.pass)
    o.detail = "DFT rel " + sci(dft_err) + ", conv abs " + sci(conv_err) + ", ridge rel " + sci(ridge_err);
  return o;
}

// --- 4: gradients -----------------------------------------------------------------------

Outcome gradient_checks() {
  using namespace neural;
  Outcome o;
  Rng rng(4);
  double worst = 0;
  oracle::GradCheck worst_check;
  std::string worst_name;
  std::size_t probes = 0, kinks = 0;
  auto note = [&](const std::string& name, const oracle::GradCheck& g) {
    o.metrics.push_back(g.max_rel_error);
    probes += g.probes;
    kinks += g.kinks;
    o.require(g.probes > 0 && g.kinks <= g.probes, name + ": too many probes on kinks");
    if (g.max_rel_error > worst) {
      worst = g.max_rel_error;
      worst_check = g;
      worst_name = name;
    }
  };

  for (Index k : {1, 4, 5, 8}) {
    Conv1d conv(2, 3, k, k % 2 == 1, rng);
    note("conv1d k=" + std::to_string(k), oracle::check_module(conv, oracle::random_tensor(3, 2, 12, rng), 10, rng));
  }
  {
    BatchNorm1d bn(3);
    bn.gamma().value = random_vector(3, rng);
    bn.beta().value = random_vector(3, rng);
    note("batchnorm", oracle::check_module(bn, oracle::random_tensor(4, 3, 7, rng), 3, rng));
  }
  {
    ReLU relu;
    note("relu", oracle::check_module(relu, oracle::random_tensor(2, 3, 10, rng), 20, rng));
    MaxPool1d pool;
    note("maxpool", oracle::check_module(pool, oracle::random_tensor(2, 3, 10, rng), 20, rng));
  }
  note("conv block", oracle::check_module(*conv_block(2, 4, 8, rng), oracle::random_tensor(3, 2, 12, rng), 4, rng));
  note("residual (projection)",
       oracle::check_module(*resnet_block(2, 4, rng), oracle::random_tensor(3, 2, 12, rng), 4, rng));
  note("residual (identity)",
       oracle::check_module(*resnet_block(3, 3, rng), oracle::random_tensor(3, 3, 12, rng), 4, rng));
  {
    InceptionModule first(1, rng), deep(4, rng);
    note("inception module", oracle::check_module(first, oracle::random_tensor(2, 1, 12, rng), 3, rng));
    note("inception module (bottleneck)", oracle::check_module(deep, oracle::random_tensor(2, 4, 12, rng), 3, rng));
  }

  const Tensor3 x = oracle::random_tensor(3, 1, 16, rng);
  const std::vector<int> y{0, 1, 1};
  note("convnet", oracle::check_network(*build_convnet(16, rng), x, y, 3, rng));
  note("resnet", oracle::check_network(*build_resnet(16, rng), x, y, 2, rng));
  note("inceptiontime member",
       oracle::check_network(*build_inception_network(40, rng), oracle::random_tensor(2, 1, 40, rng),
                             std::vector<int>{0, 1}, 2, rng));

  o.require(worst < 1e-6, worst_name + " relative error " + sci(worst) + " (analytic " +
                                sci(worst_check.worst_analytic) + ", numeric " + sci(worst_check.worst_numeric) + ")");
  o.detail = (o.pass ? "" : o.detail + "; ") + "max relative error " + sci(worst) + " (" + worst_name + ") over " + std::to_string(probes) + " probes, " + std::to_string(kinks) + " kink probes redrawn";
  return o;
}

// --- 5, 6: synthetic end-to-end ---------------------------------------------------------

harness::ExperimentConfig synthetic_config(const dataio::ApplianceModel& app, int houses, int days) {
  harness::ExperimentConfig c;
  c.dataset_name = "synthetic";
  c.synth.n_houses = houses;
  c.synth.days_per_house = days;
  c.synth.presence_prob = 0.5;
  c.synth.noise_std = 50;
  c.synth.house_profile_w = 300;
  c.synth.seed = 2024;
  c.synth.appliance_models = {app};
  c.case_id = app.name;
  c.time_budget_s = 0;
  c.isolate = false;
  c.seeds = {1};
  return c;
}

double mean_f1(const std::vector<harness::RunRecord>& runs) {
  double s = 0;
  for (const auto& r : runs) s += r.macro_f1.value_or(0.0);
  return s / double(runs.size());
}

Outcome synthetic_end_to_end() {
  Outcome o;
  dataio::ApplianceModel block;
  block.name = "block";
  block.power_w = 2000;
  block.duration_s = 3600;
  auto cfg = synthetic_config(block, 600, 1);
  std::string summary;
  for (std::int64_t interval : {60, 1800}) {
    const auto instances = harness::load_instances(cfg, interval);
    for (const std::string clf : {"rocket", "minirocket", "convnet"}) {
      cfg.classifier = clf;
      const auto runs = harness::run_cell(cfg, instances, {interval});
      const double f1 = mean_f1(runs);
      const double need = interval == 60 ? 0.95 : 0.80;
      o.require(f1 >= need, clf + "@" + std::to_string(interval) + "s = " + fmt(f1));
      o.metrics.push_back(f1);
      summary += clf + "@" + std::to_string(interval) + "s " + fmt(f1) + ", ";
    }
  }

  dataio::ApplianceModel spike;
  spike.name = "spike";
  spike.shape = dataio::SignatureShape::spike_train;
  spike.power_w = 2000;
  spike.duration_s = 90;
  auto scfg = synthetic_config(spike, 600, 1);
  scfg.classifier = "minirocket";
  scfg.seeds = {1, 2, 3, 4, 5};
  const double fine = mean_f1(harness::run_cell(scfg, harness::load_instances(scfg, 60), {60}));
  const double coarse = mean_f1(harness::run_cell(scfg, harness::load_instances(scfg, 1800), {1800}));
  o.metrics.push_back(fine);
  o.metrics.push_back(coarse);
  o.require(fine - coarse >= 0.1, "spike-train drop " + fmt(fine - coarse));
  summary += "spike-train minirocket drop " + fmt(fine) + " -> " + fmt(coarse) + " = " + fmt(fine - coarse);
  o.detail = (o.pass ? "" : o.detail + "; ") + summary;
  return o;
}

Outcome data_size_finding() {
  Outcome o;
  dataio::ApplianceModel heater;
  heater.name = "heater";
  heater.power_w = 800;
  heater.duration_s = 3600;
  auto cfg = synthetic_config(heater, 120, 8);
  cfg.synth.house_profile_w = 1500;
  cfg.synth.noise_std = 100;
  cfg.classifier = "minirocket";
  cfg.seeds = {1, 2, 3, 4, 5};
  const std::int64_t interval = 1800;
  const auto instances = harness::load_instances(cfg, interval);
  std::string summary;
  for (double p : {0.25, 0.5}) {
    const double houses =
        mean_f1(harness::run_cell(cfg, instances, {interval, harness::DataSizeMode::subset_houses, p}));
    const double series =
        mean_f1(harness::run_cell(cfg, instances, {interval, harness::DataSizeMode::subset_series, p}));
    o.metrics.push_back(houses);
    o.metrics.push_back(series);
    o.require(series > houses, "p=" + fmt(p, 2) + ": series " + fmt(series) + " <= houses " + fmt(houses));
    summary += "p=" + fmt(p, 2) + ": subset-series " + fmt(series) + " vs subset-houses " + fmt(houses) + "; ";
  }
  o.detail = (o.pass ? "" : o.detail + "; ") + summary;
  return o;
}

// --- 7: public-data reproduction --------------------------------------------------------

std::optional<Outcome> refit_reproduction() {
  const char* dir = std::getenv("ADBENCH_REFIT_DIR");
  if (!dir || !*dir) return std::nullopt;
  Outcome o;
  harness::ExperimentConfig cfg;
  cfg.dataset_name = "refit";
  cfg.schema = harness::DatasetSchema::nilm;
  cfg.dataset_path = dir;
  cfg.time_budget_s = 0;
  cfg.isolate = false;
  cfg.seeds = {1, 2, 3, 4, 5};

  cfg.case_id = "dishwasher";
  cfg.classifier = "rocket";
  const double dish = mean_f1(harness::run_cell(cfg, harness::load_instances(cfg, 1800), {1800}));
  o.require(std::abs(dish - 0.619) <= 0.08, "dishwasher ROCKET " + fmt(dish));

  cfg.case_id = "kettle";
  cfg.classifier = "resnet";
  const double k30 = mean_f1(harness::run_cell(cfg, harness::load_instances(cfg, 1800), {1800}));
  const double k1 = mean_f1(harness::run_cell(cfg, harness::load_instances(cfg, 60), {60}));
  o.require(std::abs((k1 - k30) - 0.2) <= 0.1, "kettle ResNet gain " + fmt(k1 - k30));
  o.detail = (o.pass ? "" : o.detail + "; ") + "dishwasher ROCKET " + fmt(dish) + ", kettle ResNet " + fmt(k30) +
             " -> " + fmt(k1);
  return o;
}

// --- driver -----------------------------------------------------------------------------

struct Criterion {
  int id;
  std::string name;
  double limit_s;
  std::function<Outcome()> run;
};

bool report(int id, const std::string& name, const Outcome& o, double secs, double limit_s) {
  const bool in_time = secs < limit_s;
  const bool pass = o.pass && in_time;
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << name << " [" << fmt(secs, 1) << " s";
  if (!in_time) std::cout << ", over the " << fmt(limit_s, 0) << " s limit";
  std::cout << "] " << o.detail << std::endl;
  return pass;
}

}  // namespace

// Optional arguments restrict the run to the listed criterion ids.
int main(int argc, char** argv) {
  set_log_level(LogLevel::quiet);
  set_num_threads(1);
  std::vector<Criterion> criteria{
      {1, "metric oracles", 1, metric_oracles},
      {2, "distance oracles", 30, distance_oracles},
      {3, "numerical-transform oracles", 60, transform_oracles},
      {4, "gradient checks", 300, gradient_checks},
      {5, "synthetic end-to-end", 1800, synthetic_end_to_end},
      {6, "data-size finding", 1800, data_size_finding},
  };

  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  if (!only.empty())
    std::erase_if(criteria, [&](const Criterion& c) { return !only.contains(c.id); });

  bool all = true;
  std::vector<std::vector<double>> first;
  for (const auto& c : criteria) {
    const auto [o, secs] = eval::timed(c.run);
    all = report(c.id, c.name, o, secs, c.limit_s) && all;
    first.push_back(o.metrics);
  }

  if (only.empty() || only.contains(7)) {
    const auto [o, secs] = eval::timed([] { return refit_reproduction(); });
    if (o) all = report(7, "REFIT reproduction", *o, secs, 1e9) && all;
    else std::cout << "SKIP criterion 7: REFIT reproduction (set ADBENCH_REFIT_DIR to converted REFIT CSVs)\n";
  }

  if (only.empty() || only.contains(8)) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t compared = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
      const auto again = criteria[i].run().metrics;
      const bool same = again.size() == first[i].size() &&
                        std::memcmp(again.data(), first[i].data(), again.size() * sizeof(double)) == 0;
      o.require(same, "criterion " + std::to_string(criteria[i].id) + " metrics differ on rerun");
      compared += again.size();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.detail = (o.pass ? "" : o.detail + "; ") + std::to_string(compared) + " metric values bit-identical on rerun";
    all = report(8, "determinism", o, secs, 1e9) && all;
  }
  return all ? 0 : 1;
}
