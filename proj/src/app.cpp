#include "axeval/app.hpp"

#include <fstream>

#include "axeval/cache.hpp"
#include "axeval/http_backend.hpp"
#include "axeval/prompts.hpp"
#include "axeval/stub_backend.hpp"

namespace axeval {

namespace fs = std::filesystem;

RunPhase parse_run_phase(std::string_view name) {
  if (name == "generate") return RunPhase::Generate;
  if (name == "infer") return RunPhase::Infer;
  if (name == "judge") return RunPhase::Judge;
  if (name == "all") return RunPhase::All;
  throw std::invalid_argument("unknown phase '" + std::string(name) +
                              "' (expected generate, infer, judge or all)");
}

fs::path run_directory(const fs::path& out, const std::string& run_id) {
  if (run_id.empty() || run_id.find_first_of("/\\") != std::string::npos || run_id == "." ||
      run_id == "..") {
    throw std::invalid_argument("run id must be a plain name: '" + run_id + "'");
  }
  return out / "runs" / run_id;
}

fs::path cache_directory(const fs::path& out) { return out / "cache"; }

std::shared_ptr<ChatBackend> make_backend(std::string_view kind,
                                          const std::optional<fs::path>& stub_script) {
  if (kind == "http") return std::make_shared<HttpBackend>();
  if (kind != "stub") {
    throw std::invalid_argument("unknown backend '" + std::string(kind) +
                                "' (expected stub or http)");
  }
  auto stub = std::make_shared<StubBackend>();
  if (stub_script) {
    std::ifstream in(*stub_script);
    if (!in) throw std::runtime_error("cannot read stub script " + stub_script->string());
    stub->load_script(nlohmann::json::parse(in));
  } else {
    stub->set_fallback(synthetic_reply);
  }
  return stub;
}

RunSummary run_experiment(const ExperimentConfig& config, RunPhase phase) {
  if (config.runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (!config.generation_backend || !config.judge_backend) {
    throw std::invalid_argument("both a generation and a judge backend are required");
  }
  config.generation_model.validate();
  config.judge_model.validate();

  const PromptLibrary prompts =
      config.prompt_dir ? PromptLibrary::load(*config.prompt_dir) : PromptLibrary::builtin();

  RunManifest manifest;
  manifest.run_id = config.run_id;
  manifest.dataset = config.dataset_info;
  manifest.generation_model = config.generation_model;
  manifest.judge_model = config.judge_model;
  manifest.prompt_digests = prompts.file_digests();
  manifest.seed = config.seed;
  manifest.runs = config.runs;

  RunSummary summary;
  summary.run_dir = run_directory(config.out_dir, config.run_id);
  RunLedger ledger =
      RunLedger::create_or_resume(summary.run_dir, std::move(manifest), config.instances);

  auto cache = config.options.use_cache
                   ? std::make_shared<ResponseCache>(cache_directory(config.out_dir))
                   : nullptr;
  // One gateway per backend object so its in-flight limit is shared.
  auto generator = std::make_shared<Gateway>(config.generation_backend, config.gateway, cache);
  auto judge = config.judge_backend == config.generation_backend
                   ? generator
                   : std::make_shared<Gateway>(config.judge_backend, config.gateway, cache);

  Experiment experiment(prompts, ledger, *generator, *judge, config.options);
  if (phase == RunPhase::Generate || phase == RunPhase::All) {
    summary.outcomes["generate"] = experiment.run_generation();
  }
  if (phase == RunPhase::Infer || phase == RunPhase::All) {
    summary.outcomes["infer"] = experiment.run_inference_with_axioms();
  }
  if (phase == RunPhase::Judge || phase == RunPhase::All) {
    summary.outcomes["judge"] = experiment.run_judging();
  }
  summary.status = compute_status(ledger);
  summary.backend_calls = generator->stats().backend_calls;
  summary.cache_hits = generator->stats().cache_hits;
  if (judge != generator) {
    summary.backend_calls += judge->stats().backend_calls;
    summary.cache_hits += judge->stats().cache_hits;
  }
  return summary;
}

}  // namespace axeval
