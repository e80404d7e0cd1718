// axeval: sample NLI instances, run the generation/inference/judging
// phases against a backend, and compute the metric tables from the ledger.
//
// Exit codes: 0 clean, 2 finished with exclusions (or pending/omitted
// tables), 1 fatal error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "axeval/app.hpp"
#include "axeval/dataset.hpp"
#include "axeval/ledger.hpp"
#include "axeval/orchestrator.hpp"
#include "axeval/report.hpp"

namespace fs = std::filesystem;
using namespace axeval;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitFatal = 1;
constexpr int kExitExclusions = 2;

struct DatasetArgs {
  std::string path;
  std::string format = "snli-jsonl";
  std::string targets;  // "e,c,n"; empty means the per-format default
  std::optional<std::uint64_t> seed;
};

struct ModelArgs {
  std::string name;
  std::string endpoint = ModelConfig{}.endpoint_url;
  std::string backend_id = "default";
  std::optional<double> temperature;
  int max_tokens = 256;
  int timeout_ms = 60000;
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args, bool required) {
  auto* dataset = cmd->add_option("--dataset", args.path, "Dataset file (JSON lines)");
  if (required) dataset->required();
  cmd->add_option("--format", args.format, "snli-jsonl, anli-jsonl or generic-jsonl")
      ->capture_default_str();
  cmd->add_option("--targets", args.targets,
                  "Per-class sample sizes e,c,n (defaults: SNLI 689,651,660; ANLI 771,585,644)");
  cmd->add_option("--seed", args.seed, "Sampling seed");
}

void add_model_options(CLI::App* cmd, const std::string& prefix, ModelArgs& args,
                       const std::string& what) {
  cmd->add_option("--" + prefix + "-model", args.name, what + " model name")->required();
  cmd->add_option("--" + prefix + "-endpoint", args.endpoint, what + " endpoint URL")
      ->capture_default_str();
  cmd->add_option("--" + prefix + "-backend-id", args.backend_id,
                  what + " backend id (selects AXEVAL_API_KEY_<ID>)")
      ->capture_default_str();
  cmd->add_option("--" + prefix + "-temperature", args.temperature,
                  what + " sampling temperature (backend default when unset)");
  cmd->add_option("--" + prefix + "-max-tokens", args.max_tokens)->capture_default_str();
  cmd->add_option("--" + prefix + "-timeout-ms", args.timeout_ms)->capture_default_str();
}

ModelConfig to_model(const ModelArgs& args) {
  ModelConfig config;
  config.model_name = args.name;
  config.endpoint_url = args.endpoint;
  config.backend_id = args.backend_id;
  config.temperature = args.temperature;
  config.max_tokens = args.max_tokens;
  config.timeout = std::chrono::milliseconds(args.timeout_ms);
  config.validate();
  return config;
}

ClassCounts parse_targets(const std::string& text) {
  std::vector<std::size_t> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      values.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw std::invalid_argument("--targets expects three non-negative integers e,c,n");
    }
  }
  if (values.size() != 3) {
    throw std::invalid_argument("--targets expects three non-negative integers e,c,n");
  }
  return ClassCounts::of(values[0], values[1], values[2]);
}

std::optional<ClassCounts> resolve_targets(const DatasetArgs& args, DatasetFormat format) {
  if (!args.targets.empty()) return parse_targets(args.targets);
  if (format == DatasetFormat::SnliJsonl) return kSnliTargets;
  if (format == DatasetFormat::AnliJsonl) return kAnliTargets;
  return std::nullopt;
}

void print_counts(std::ostream& out, const ClassCounts& counts) {
  out << "Entailment     " << counts.entailment << '\n'
      << "Contradiction  " << counts.contradiction << '\n'
      << "Neutral        " << counts.neutral << '\n'
      << "total          " << counts.total << '\n';
}

std::string pad(std::string text, std::size_t width) {
  if (text.size() < width) text.resize(width, ' ');
  return text;
}

void print_status(std::ostream& out, const ExperimentStatus& status) {
  out << pad("phase", 16) << pad("expected", 10) << pad("completed", 11) << pad("excluded", 10)
      << "pending\n";
  for (const auto& [phase, s] : status.phases) {
    out << pad(std::string(to_string(phase)), 16) << pad(std::to_string(s.expected), 10)
        << pad(std::to_string(s.completed), 11) << pad(std::to_string(s.excluded), 10)
        << s.pending() << '\n';
  }
  out << status.total_pending() << " pending, " << status.total_excluded() << " excluded\n";
}

struct LoadedSample {
  std::vector<NliInstance> instances;
  nlohmann::json info;
};

// Reads the dataset and, when targets apply, draws the stratified sample.
LoadedSample load_sample(const DatasetArgs& args, bool sample_by_default) {
  const DatasetFormat format = parse_dataset_format(args.format);
  LoadedDataset loaded = load_dataset(args.path, format);
  if (!loaded.skipped.empty()) {
    std::cerr << "skipped " << loaded.skipped.size() << " of " << loaded.line_count
              << " lines (first: line " << loaded.skipped.front().line << ", "
              << loaded.skipped.front().reason << ")\n";
  }
  LoadedSample sample;
  sample.info = {{"path", fs::absolute(args.path).lexically_normal().string()},
                 {"format", to_string(format)},
                 {"loaded", loaded.instances.size()},
                 {"skipped", loaded.skipped.size()}};
  const bool sample_now = !args.targets.empty() || (sample_by_default && args.seed.has_value());
  if (sample_now) {
    const auto targets = resolve_targets(args, format);
    if (!targets) throw std::invalid_argument("--targets is required for generic-jsonl input");
    const std::uint64_t seed = args.seed.value_or(0);
    sample.instances = sample_stratified(loaded.instances, *targets, seed);
    sample.info["targets"] = {targets->entailment, targets->contradiction, targets->neutral};
    sample.info["seed"] = seed;
  } else {
    sample.instances = std::move(loaded.instances);
  }
  return sample;
}

int cmd_sample(const DatasetArgs& args, const fs::path& out_file) {
  const DatasetFormat format = parse_dataset_format(args.format);
  const auto targets = resolve_targets(args, format);
  if (!targets) throw std::invalid_argument("--targets is required for generic-jsonl input");
  DatasetArgs with_targets = args;
  with_targets.targets = std::to_string(targets->entailment) + "," +
                         std::to_string(targets->contradiction) + "," +
                         std::to_string(targets->neutral);
  if (!with_targets.seed) with_targets.seed = 0;
  const LoadedSample sample = load_sample(with_targets, true);
  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  save_generic_jsonl(out_file, sample.instances);
  std::cout << "wrote " << sample.instances.size() << " instances to " << out_file.string()
            << '\n';
  print_counts(std::cout, class_distribution(sample.instances));
  return kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Commonsense-axiom NLI evaluation: sample, run, report"};
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.require_subcommand(1);

  // sample
  DatasetArgs sample_args;
  std::string sample_out = "out/sample.jsonl";
  auto* sample = app.add_subcommand("sample", "Draw a stratified sample and print its distribution");
  add_dataset_options(sample, sample_args, true);
  sample->add_option("--out", sample_out, "Output file (generic-jsonl)")->capture_default_str();

  // run
  DatasetArgs run_dataset;
  ModelArgs gen_args;
  ModelArgs judge_args;
  std::string out_dir = "out";
  std::string run_id = "default";
  std::string phase = "all";
  std::string backend = "stub";
  std::optional<std::string> stub_script;
  std::optional<std::string> prompts_dir;
  int runs = 5;
  std::size_t workers = 4;
  std::size_t max_in_flight = 4;
  int max_attempts = 4;
  bool no_cache = false;
  auto* run = app.add_subcommand("run", "Execute experiment phases and print the ledger status");
  add_dataset_options(run, run_dataset, true);
  add_model_options(run, "gen", gen_args, "Generation");
  add_model_options(run, "judge", judge_args, "Judge");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--run-id", run_id, "Run name under <out>/runs")->capture_default_str();
  run->add_option("--phase", phase, "generate, infer, judge or all")->capture_default_str();
  run->add_option("--runs", runs, "Repetitions per instance (R)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--backend", backend, "stub or http")
      ->check(CLI::IsMember({"stub", "http"}))
      ->capture_default_str();
  run->add_option("--stub-script", stub_script, "JSON script for the stub backend");
  run->add_option("--prompts", prompts_dir, "Prompt directory (defaults to the built-in set)");
  run->add_option("--workers", workers, "Instances processed concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--max-in-flight", max_in_flight, "Concurrent requests per backend")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--max-attempts", max_attempts, "Attempts per request before exclusion")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_flag("--no-cache", no_cache, "Bypass the response cache");

  // report
  std::string report_out = "out";
  std::string report_run_id = "default";
  std::optional<std::string> report_dir;
  int help_threshold = 6;
  int cons_threshold = 8;
  std::string estimator = "sample";
  std::string emit = "md,csv,json";
  auto* report = app.add_subcommand("report", "Compute the metric tables from a run ledger");
  report->add_option("--out", report_out, "Output directory used by run")->capture_default_str();
  report->add_option("--run-id", report_run_id)->capture_default_str();
  report->add_option("--report-dir", report_dir,
                     "Where to write reports (default <out>/runs/<run-id>/report)");
  report->add_option("--help-threshold", help_threshold, "Helpfulness ratings >= this count as correct")
      ->check(CLI::Range(1, 10))
      ->capture_default_str();
  report->add_option("--cons-threshold", cons_threshold, "Similarity ratings >= this count as consistent")
      ->check(CLI::Range(1, 10))
      ->capture_default_str();
  report->add_option("--std", estimator, "sample or population")
      ->check(CLI::IsMember({"sample", "population"}))
      ->capture_default_str();
  report->add_option("--emit", emit, "Comma-separated formats: md, csv, json")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; usage errors share the fatal code.
    return app.exit(e) == 0 ? kExitClean : kExitFatal;
  }

  try {
    if (*sample) return cmd_sample(sample_args, sample_out);

    if (*run) {
      LoadedSample loaded = load_sample(run_dataset, false);
      ExperimentConfig config;
      config.out_dir = out_dir;
      config.run_id = run_id;
      config.instances = std::move(loaded.instances);
      config.dataset_info = std::move(loaded.info);
      config.seed = run_dataset.seed;
      config.runs = runs;
      config.generation_model = to_model(gen_args);
      config.judge_model = to_model(judge_args);
      const std::optional<fs::path> script =
          stub_script ? std::optional<fs::path>(*stub_script) : std::nullopt;
      config.generation_backend = make_backend(backend, script);
      config.judge_backend = config.generation_backend;
      if (prompts_dir) config.prompt_dir = *prompts_dir;
      config.options.workers = workers;
      config.options.use_cache = !no_cache;
      config.gateway.max_in_flight = max_in_flight;
      config.gateway.retry.max_attempts = max_attempts;

      const RunSummary summary = run_experiment(config, parse_run_phase(phase));
      std::cout << "run directory: " << summary.run_dir.string() << '\n';
      for (const auto& [step, outcome] : summary.outcomes) {
        std::cout << step << ": " << outcome.executed << " executed, " << outcome.skipped
                  << " already done, " << outcome.excluded << " excluded\n";
      }
      std::cout << "backend calls: " << summary.backend_calls
                << ", cache hits: " << summary.cache_hits << '\n';
      print_status(std::cout, summary.status);
      return summary.status.total_excluded() > 0 ? kExitExclusions : kExitClean;
    }

    if (*report) {
      const fs::path run_dir = run_directory(report_out, report_run_id);
      if (!fs::exists(run_dir / "manifest.json")) {
        throw std::runtime_error("no run found at " + run_dir.string());
      }
      const RunLedger ledger = RunLedger::open(run_dir);
      ReportOptions options;
      options.thresholds = {help_threshold, cons_threshold};
      options.estimator = parse_std_estimator(estimator);
      const MetricsReport metrics = build_report(ledger, options);
      const fs::path dir = report_dir ? fs::path(*report_dir) : run_dir / "report";
      for (const auto& path : write_report(metrics, dir, parse_report_formats(emit))) {
        std::cout << "wrote " << path.string() << '\n';
      }
      for (const auto& warning : metrics.warnings) std::cerr << "warning: " << warning << '\n';
      print_status(std::cout, metrics.status);
      const bool clean = metrics.warnings.empty() && metrics.exclusions.empty();
      return clean ? kExitClean : kExitExclusions;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitFatal;
}
