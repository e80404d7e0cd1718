#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "axeval/dataset.hpp"
#include "axeval/gateway.hpp"
#include "axeval/ledger.hpp"
#include "axeval/orchestrator.hpp"

// Glue shared by the command-line tool and the Python module: output
// layout, backend construction and phase sequencing.
namespace axeval {

enum class RunPhase { Generate, Infer, Judge, All };
RunPhase parse_run_phase(std::string_view name);

/// <out>/runs/<run_id> holds the ledger; <out>/cache the response cache.
std::filesystem::path run_directory(const std::filesystem::path& out, const std::string& run_id);
std::filesystem::path cache_directory(const std::filesystem::path& out);

/// "stub" builds a StubBackend that answers from `stub_script` when given
/// and from the synthetic model otherwise; "http" builds an HttpBackend.
std::shared_ptr<ChatBackend> make_backend(std::string_view kind,
                                          const std::optional<std::filesystem::path>& stub_script);

struct ExperimentConfig {
  std::filesystem::path out_dir;
  std::string run_id = "default";
  std::vector<NliInstance> instances;
  nlohmann::json dataset_info = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
  int runs = 5;
  ModelConfig generation_model;
  ModelConfig judge_model;
  std::shared_ptr<ChatBackend> generation_backend;
  std::shared_ptr<ChatBackend> judge_backend;  // may be the same object
  std::optional<std::filesystem::path> prompt_dir;
  ExperimentOptions options;
  GatewayOptions gateway;
};

struct RunSummary {
  std::filesystem::path run_dir;
  std::map<std::string, PhaseOutcome> outcomes;  // by step name
  ExperimentStatus status;
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
};

/// Creates or resumes the run and executes `phase` (All runs generate,
/// infer and judge in order). Throws PreconditionError when an earlier
/// phase is incomplete.
RunSummary run_experiment(const ExperimentConfig& config, RunPhase phase);

}  // namespace axeval
