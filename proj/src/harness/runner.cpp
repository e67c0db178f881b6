#include "adbench/harness/runner.hpp"

#include "adbench/eval.hpp"
#include "adbench/harness/registry.hpp"
#include "adbench/util.hpp"

#include <nlohmann/json.hpp>

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <set>

namespace adbench::harness {

namespace {

using Clock = std::chrono::steady_clock;

BudgetResult run_inline(const std::function<std::string()>& work, double budget_s) {
  const auto t0 = Clock::now();
  try {
    std::string payload = work();
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    if (budget_s > 0 && elapsed > budget_s) return {RunStatus::timeout, {}, "budget exceeded"};
    return {RunStatus::ok, std::move(payload), {}};
  } catch (const std::exception& e) {
    return {RunStatus::error, {}, e.what()};
  }
}

void write_all(int fd, const std::string& s) {
  std::size_t off = 0;
  while (off < s.size()) {
    const auto n = ::write(fd, s.data() + off, s.size() - off);
    if (n <= 0) return;
    off += std::size_t(n);
  }
}

}  // namespace

BudgetResult run_with_budget(const std::function<std::string()>& work, double budget_s, bool isolate) {
  if (!isolate) return run_inline(work, budget_s);
  int fds[2];
  if (::pipe(fds) != 0) throw std::runtime_error("pipe() failed");
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw std::runtime_error("fork() failed");
  }
  if (pid == 0) {
    ::close(fds[0]);
    std::string msg;
    try {
      msg = "O" + work();
    } catch (const std::exception& e) {
      msg = std::string("E") + e.what();
    } catch (...) {
      msg = "Eunknown exception";
    }
    write_all(fds[1], msg);
    ::close(fds[1]);
    ::_exit(0);
  }
  ::close(fds[1]);
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(budget_s));
  std::string buf;
  bool timed_out = false;
  char chunk[4096];
  for (;;) {
    int wait_ms = -1;
    if (budget_s > 0) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      if (left <= 0) {
        timed_out = true;
        break;
      }
      wait_ms = int(std::min<long long>(left, 1000 * 60 * 60));
    }
    pollfd p{fds[0], POLLIN, 0};
    const int rc = ::poll(&p, 1, wait_ms);
    if (rc < 0 && errno == EINTR) continue;
    if (rc == 0) continue;  // re-check the deadline
    const auto n = ::read(fds[0], chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buf.append(chunk, std::size_t(n));
  }
  ::close(fds[0]);
  if (timed_out) ::kill(pid, SIGKILL);
  int st = 0;
  while (::waitpid(pid, &st, 0) < 0 && errno == EINTR) {
  }
  if (timed_out) return {RunStatus::timeout, {}, "budget of " + std::to_string(budget_s) + " s exceeded"};
  if (buf.empty()) {
    const std::string why = WIFSIGNALED(st) ? "signal " + std::to_string(WTERMSIG(st)) : "exit " + std::to_string(WEXITSTATUS(st));
    return {RunStatus::error, {}, "worker terminated abnormally (" + why + ")"};
  }
  if (buf[0] == 'O') return {RunStatus::ok, buf.substr(1), {}};
  return {RunStatus::error, {}, buf.substr(1)};
}

std::vector<dataio::HouseholdRecord> load_households(const ExperimentConfig& config) {
  switch (config.schema) {
    case DatasetSchema::synthetic: return dataio::generate_synthetic(config.synth);
    case DatasetSchema::nilm: return dataio::read_csv_dataset(config.dataset_path, dataio::SchemaKind::nilm);
    case DatasetSchema::survey: return dataio::read_csv_dataset(config.dataset_path, dataio::SchemaKind::survey);
    case DatasetSchema::preprocessed: break;
  }
  throw ValidationError("dataset schema 'preprocessed' holds instances, not household records");
}

Dataset load_instances(const ExperimentConfig& config, std::int64_t interval_s) {
  if (config.schema == DatasetSchema::preprocessed) {
    auto pre = preprocess::read_preprocessed(config.dataset_path);
    const auto it = pre.manifest.find("interval_s");
    if (it != pre.manifest.end() && std::stoll(it->second) != interval_s)
      throw ValidationError("preprocessed dataset is at " + it->second + " s, run requested " +
                            std::to_string(interval_s) + " s");
    Dataset out;
    for (auto& d : pre.instances)
      if (d.case_id == config.case_id) out.push_back(std::move(d));
    if (out.empty()) throw ValidationError("preprocessed dataset has no instances for case " + config.case_id);
    return out;
  }
  auto cfg = config.preprocess;
  cfg.target_interval_s = interval_s;
  return preprocess::build_instances(load_households(config), config.case_id, cfg);
}

Dataset subset_train(const Dataset& train, DataSizeMode mode, double p, std::uint64_t seed) {
  if (!(p > 0 && p <= 1)) throw ValidationError("data size fraction must lie in (0, 1]");
  if (mode == DataSizeMode::none || p == 1.0) return train;
  std::map<std::string, std::vector<std::size_t>> by_house;
  for (std::size_t i = 0; i < train.size(); ++i) by_house[train[i].source_id].push_back(i);
  auto rng = stream_rng(seed, "datasize");
  std::vector<std::size_t> keep;
  if (mode == DataSizeMode::subset_houses) {
    std::vector<std::string> houses;
    for (const auto& [h, _] : by_house) houses.push_back(h);
    std::shuffle(houses.begin(), houses.end(), rng);
    const auto n = std::size_t(std::ceil(p * double(houses.size()) - 1e-9));
    for (std::size_t i = 0; i < n; ++i) keep.insert(keep.end(), by_house[houses[i]].begin(), by_house[houses[i]].end());
  } else {
    for (auto& [h, idx] : by_house) {
      std::shuffle(idx.begin(), idx.end(), rng);
      const auto n = std::size_t(std::ceil(p * double(idx.size()) - 1e-9));
      keep.insert(keep.end(), idx.begin(), idx.begin() + long(n));
    }
  }
  std::sort(keep.begin(), keep.end());
  Dataset out;
  for (std::size_t i : keep) out.push_back(train[i]);
  if (out.empty()) throw ValidationError("data size fraction leaves an empty training set");
  return preprocess::balance_train(out, seed);
}

std::vector<RunRecord> run_cell(const ExperimentConfig& config, const Dataset& instances, const RunSpec& spec) {
  check_classifier(config.classifier, config.overrides);
  set_num_threads(config.threads);
  const std::string digest = config.digest();
  std::vector<RunRecord> out;
  for (std::uint64_t seed : config.run_seeds()) {
    RunRecord r;
    r.config_digest = digest;
    r.dataset = config.dataset_name;
    r.classifier = config.classifier;
    r.case_id = config.case_id;
    r.interval_s = spec.interval_s;
    r.seed = seed;
    r.data_size_mode = to_string(spec.mode);
    r.fraction = spec.fraction;
    char frac[32];
    std::snprintf(frac, sizeof frac, "%g", spec.fraction);
    r.run_id = r.dataset + "/" + r.case_id + "/" + r.classifier + "/" + std::to_string(r.interval_s) + "s/" +
               r.data_size_mode + "-" + frac + "/seed" + std::to_string(seed);

    auto pcfg = config.preprocess;
    pcfg.target_interval_s = spec.interval_s;
    pcfg.seed = seed;
    ExperimentSplit split = preprocess::split(instances, pcfg);
    r.ib_ratio = preprocess::imbalance_ratio(split.test);
    r.n_test = split.test.size();
    try {
      split.train = subset_train(split.train, spec.mode, spec.fraction, seed);
    } catch (const ValidationError& e) {
      r.status = RunStatus::error;
      r.error = e.what();
      out.push_back(r);
      continue;
    }
    r.n_train = split.train.size();

    const auto work = [&]() -> std::string {
      auto [model, train_s] = eval::timed([&] { return fit_classifier(config.classifier, split, seed, config.overrides); });
      auto [pred, infer_s] = eval::timed([&] { return model->predict_labels(split.test); });
      const auto rep = eval::evaluate(labels_of(split.test), pred, train_s, infer_s);
      return nlohmann::json{{"macro_f1", rep.macro_f1},
                            {"f1_pos", rep.positive.f1},
                            {"f1_neg", rep.negative.f1},
                            {"train_time_s", train_s},
                            {"infer_time_s", infer_s}}
          .dump();
    };
    log_info("run " + r.run_id + " (train " + std::to_string(r.n_train) + ", test " + std::to_string(r.n_test) + ")");
    const auto res = run_with_budget(work, config.time_budget_s, config.isolate);
    r.status = res.status;
    r.error = res.error;
    if (res.status == RunStatus::ok) {
      const auto j = nlohmann::json::parse(res.payload);
      r.macro_f1 = j.at("macro_f1").get<double>();
      r.f1_pos = j.at("f1_pos").get<double>();
      r.f1_neg = j.at("f1_neg").get<double>();
      r.train_time_s = j.at("train_time_s").get<double>();
      r.infer_time_s = j.at("infer_time_s").get<double>();
      log_info("  macro F1 " + std::to_string(*r.macro_f1));
    } else {
      log_warning("run " + r.run_id + ": " + to_string(r.status) + ": " + r.error);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RunRecord> run_benchmark(const ExperimentConfig& config) {
  const auto interval = config.preprocess.target_interval_s;
  return run_cell(config, load_instances(config, interval), {interval});
}

std::vector<RunRecord> sweep_frequency(const ExperimentConfig& config) {
  std::vector<RunRecord> out;
  for (auto interval : config.intervals) {
    auto part = run_cell(config, load_instances(config, interval), {interval});
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<RunRecord> sweep_datasize(const ExperimentConfig& config) {
  const auto interval = config.preprocess.target_interval_s;
  const auto instances = load_instances(config, interval);
  std::vector<DataSizeMode> modes;
  if (config.data_size_mode == DataSizeMode::none) modes = {DataSizeMode::subset_houses, DataSizeMode::subset_series};
  else modes = {config.data_size_mode};
  std::vector<RunRecord> out;
  for (double p : config.fractions)
    for (auto mode : modes) {
      auto part = run_cell(config, instances, {interval, mode, p});
      out.insert(out.end(), part.begin(), part.end());
    }
  return out;
}

}  // namespace adbench::harness
