#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "axeval/dataset.hpp"
#include "axeval/gateway.hpp"
#include "axeval/parse.hpp"

namespace axeval {

/// Every (instance, phase, run) slot the protocol fills.
enum class Phase { P1, P2, P3, JudgeHelpP1, JudgeHelpP3, JudgeConsP1, JudgeConsP3 };

inline constexpr Phase kAllPhases[] = {Phase::P1,          Phase::P2,
                                       Phase::P3,          Phase::JudgeHelpP1,
                                       Phase::JudgeHelpP3, Phase::JudgeConsP1,
                                       Phase::JudgeConsP3};

std::string_view to_string(Phase phase);
std::optional<Phase> phase_from_string(std::string_view name);

/// Whose axioms a judge phase looks at: generated before prediction (P1)
/// or the explanation given after a direct prediction (P3).
enum class AxiomSource { P1, P3 };
std::string_view to_string(AxiomSource source);
Phase help_phase(AxiomSource source);
Phase cons_phase(AxiomSource source);

enum class RecordStatus { Ok, Excluded };

/// Why a record was excluded. Gateway failures are retried on resume;
/// parse failures are final; upstream exclusions are retried once the
/// upstream record becomes usable.
inline constexpr std::string_view kReasonGatewayPrefix = "gateway:";
inline constexpr std::string_view kReasonParsePrefix = "parse:";
inline constexpr std::string_view kReasonUpstream = "upstream";

struct LedgerRecord {
  std::string instance_id;
  Phase phase = Phase::P1;
  int run_index = 1;  // judge-help: reference run; judge-cons: compared run j
  RecordStatus status = RecordStatus::Ok;
  std::string reason;  // empty unless excluded
  std::string detail;

  std::string prompt_text;
  std::string prompt_digest;
  std::string raw_text;
  std::vector<std::string> rejected_raw;  // unparseable responses before a re-query
  int attempts = 0;
  int requeries = 0;
  bool from_cache = false;

  std::optional<ParsedAxiom> axiom;
  std::optional<ParsedLabel> label;
  std::optional<ParsedRating> rating;

  bool ok() const { return status == RecordStatus::Ok; }
};

nlohmann::json record_to_json(const LedgerRecord& record);
LedgerRecord record_from_json(const nlohmann::json& doc);

struct RunManifest {
  static constexpr int kSchemaVersion = 1;

  std::string run_id = "default";
  nlohmann::json dataset = nlohmann::json::object();  // path, format, counts, digest
  ModelConfig generation_model;
  ModelConfig judge_model;
  std::map<std::string, std::string> prompt_digests;
  std::optional<std::uint64_t> seed;
  int runs = 5;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& doc);
  std::string digest() const;
};

/// Digest over the instance list, recorded in the manifest so a resumed
/// run can prove it is looking at the same sample.
std::string instances_digest(const std::vector<NliInstance>& instances);

class LedgerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The append-only experiment record: manifest.json, instances.jsonl and
/// records.jsonl under one run directory. Later lines for the same
/// (instance, phase, run) supersede earlier ones. Appends are serialized
/// and each line is flushed before append() returns.
class RunLedger {
 public:
  /// Creates the run directory, or resumes it when the stored manifest is
  /// compatible (same run count, prompts, instances and model names).
  static RunLedger create_or_resume(const std::filesystem::path& run_dir,
                                    RunManifest manifest,
                                    std::vector<NliInstance> instances);
  static RunLedger open(const std::filesystem::path& run_dir);
  static RunLedger in_memory(RunManifest manifest, std::vector<NliInstance> instances);

  RunLedger(RunLedger&&) noexcept;
  RunLedger& operator=(RunLedger&&) noexcept;
  ~RunLedger();

  const RunManifest& manifest() const;
  const std::vector<NliInstance>& instances() const;
  const NliInstance* find_instance(std::string_view id) const;
  std::optional<std::filesystem::path> directory() const;

  std::optional<LedgerRecord> find(std::string_view instance_id, Phase phase,
                                   int run_index) const;
  void append(LedgerRecord record);

  /// All current records ordered by (instance id, phase, run index).
  std::vector<LedgerRecord> snapshot() const;
  std::size_t size() const;

  /// Lines in records.jsonl that could not be parsed (torn final write).
  std::size_t damaged_lines() const;

 private:
  struct State;
  explicit RunLedger(std::unique_ptr<State> state);
  std::unique_ptr<State> state_;
};

}  // namespace axeval
