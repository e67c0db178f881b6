// adbench: generate / preprocess data, run benchmark experiments, report results.
#include "adbench/dataio.hpp"
#include "adbench/harness/config.hpp"
#include "adbench/harness/results.hpp"
#include "adbench/harness/runner.hpp"
#include "adbench/preprocess.hpp"
#include "adbench/util.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>

namespace {

using namespace adbench;
using namespace adbench::harness;

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2, kAllTimedOut = 3 };

struct CommonFlags {
  std::string config;
  std::string out;
  std::string seeds;
  double budget_s = -1;
  int threads = 0;
};

ExperimentConfig load_with_flags(const CommonFlags& f) {
  auto cfg = load_config(f.config);
  if (!f.seeds.empty()) {
    cfg.seeds = parse_seed_list(f.seeds);
    cfg.n_runs = int(cfg.seeds.size());
  }
  if (f.budget_s >= 0) cfg.time_budget_s = f.budget_s;
  if (f.threads > 0) cfg.threads = f.threads;
  if (!f.out.empty()) cfg.output = f.out;
  cfg.validate();
  return cfg;
}

int finish_runs(const ExperimentConfig& cfg, const std::vector<RunRecord>& records) {
  write_results(records, cfg.output);
  std::size_t ok = 0, timeout = 0;
  for (const auto& r : records) {
    ok += r.status == RunStatus::ok;
    timeout += r.status == RunStatus::timeout;
  }
  std::cerr << "wrote " << records.size() << " record(s) to " << cfg.output.string() << " (" << ok << " ok, "
            << timeout << " timeout, " << records.size() - ok - timeout << " error)\n";
  if (!records.empty() && timeout == records.size()) return kAllTimedOut;
  return kOk;
}

int cmd_generate(const CommonFlags& f) {
  const auto cfg = load_with_flags(f);
  if (cfg.schema != DatasetSchema::synthetic) throw ValidationError("generate needs dataset schema 'synthetic'");
  if (f.out.empty()) throw ValidationError("generate needs --out <dir>");
  const auto records = dataio::generate_synthetic(cfg.synth);
  dataio::write_csv_dataset(records, f.out);
  std::cerr << "wrote " << records.size() << " household file(s) to " << f.out << "\n";
  return kOk;
}

int cmd_preprocess(const CommonFlags& f) {
  const auto cfg = load_with_flags(f);
  if (f.out.empty()) throw ValidationError("preprocess needs --out <dir>");
  const auto instances = load_instances(cfg, cfg.preprocess.target_interval_s);
  preprocess::write_preprocessed(instances, {{"dataset", cfg.dataset_name}}, f.out);
  std::cerr << "wrote " << instances.size() << " instance(s) to " << f.out << "\n";
  return kOk;
}

int cmd_report(const std::string& path, const std::string& format, const std::string& out) {
  const auto records = read_results(path);
  const auto text = report(records, parse_report_format(format));
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream o(out, std::ios::binary);
    if (!o) throw std::runtime_error("cannot write " + out);
    o << text;
  }
  return kOk;
}

void add_common(CLI::App* sub, CommonFlags& f, bool needs_out) {
  sub->add_option("--config", f.config, "Experiment config (ini)")->required()->check(CLI::ExistingFile);
  auto* out = sub->add_option("--out", f.out, needs_out ? "Output directory" : "Results file (overrides [run] output)");
  if (needs_out) out->required();
  sub->add_option("--seeds", f.seeds, "Comma-separated run seeds (overrides [run] seeds)");
  sub->add_option("--budget-s", f.budget_s, "Per-run wall-clock budget in seconds; 0 = unlimited");
  sub->add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Appliance detection benchmark"};
  app.require_subcommand(1);
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "Only print errors");
  app.add_flag("-v,--verbose", verbose, "Log every run");

  CommonFlags f;
  auto* generate = app.add_subcommand("generate", "Write a synthetic household dataset as CSV");
  add_common(generate, f, true);
  auto* prep = app.add_subcommand("preprocess", "Write labeled, sliced instances for the configured case");
  add_common(prep, f, true);
  auto* run = app.add_subcommand("run", "Benchmark one classifier at [preprocess] target_interval_s");
  add_common(run, f, false);
  auto* freq = app.add_subcommand("sweep-frequency", "Benchmark at every interval of [run] intervals");
  add_common(freq, f, false);
  auto* size = app.add_subcommand("sweep-datasize", "Benchmark at every training fraction of [run] fractions");
  add_common(size, f, false);

  std::string results_path, format = "markdown", report_out;
  auto* rep = app.add_subcommand("report", "Summarize results as a table");
  rep->add_option("results", results_path, "Results file, directory of *.jsonl, or glob")->required();
  rep->add_option("--format", format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown"}));
  rep->add_option("--out", report_out, "Write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }
  set_log_level(quiet ? LogLevel::quiet : verbose ? LogLevel::info : LogLevel::warning);

  try {
    if (*generate) return cmd_generate(f);
    if (*prep) return cmd_preprocess(f);
    if (*rep) return cmd_report(results_path, format, report_out);
    const auto cfg = load_with_flags(f);
    if (*run) return finish_runs(cfg, run_benchmark(cfg));
    if (*freq) return finish_runs(cfg, sweep_frequency(cfg));
    return finish_runs(cfg, sweep_datasize(cfg));
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
