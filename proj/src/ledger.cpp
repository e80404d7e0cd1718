#include "axeval/ledger.hpp"

#include <fstream>
#include <mutex>
#include <sstream>
#include <tuple>

#include "axeval/digest.hpp"

namespace axeval {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::P1:
      return "p1";
    case Phase::P2:
      return "p2";
    case Phase::P3:
      return "p3";
    case Phase::JudgeHelpP1:
      return "judge_help_p1";
    case Phase::JudgeHelpP3:
      return "judge_help_p3";
    case Phase::JudgeConsP1:
      return "judge_cons_p1";
    case Phase::JudgeConsP3:
      return "judge_cons_p3";
  }
  return "p1";
}

std::optional<Phase> phase_from_string(std::string_view name) {
  for (Phase phase : kAllPhases) {
    if (to_string(phase) == name) return phase;
  }
  return std::nullopt;
}

std::string_view to_string(AxiomSource source) {
  return source == AxiomSource::P1 ? "P1" : "P3";
}

Phase help_phase(AxiomSource source) {
  return source == AxiomSource::P1 ? Phase::JudgeHelpP1 : Phase::JudgeHelpP3;
}

Phase cons_phase(AxiomSource source) {
  return source == AxiomSource::P1 ? Phase::JudgeConsP1 : Phase::JudgeConsP3;
}

json record_to_json(const LedgerRecord& r) {
  json doc = {{"instance_id", r.instance_id},
              {"phase", to_string(r.phase)},
              {"run", r.run_index},
              {"status", r.ok() ? "ok" : "excluded"},
              {"prompt_digest", r.prompt_digest},
              {"prompt", r.prompt_text},
              {"raw", r.raw_text},
              {"attempts", r.attempts},
              {"requeries", r.requeries},
              {"from_cache", r.from_cache}};
  if (!r.reason.empty()) doc["reason"] = r.reason;
  if (!r.detail.empty()) doc["detail"] = r.detail;
  if (!r.rejected_raw.empty()) doc["rejected_raw"] = r.rejected_raw;
  if (r.axiom) {
    doc["axiom"] = {{"type", r.axiom->knowledge_type},
                    {"text", r.axiom->axiom},
                    {"sentences", r.axiom->sentence_count}};
  }
  if (r.label) {
    doc["label"] = {{"label", to_string(r.label->label)},
                    {"explanation", r.label->explanation}};
  }
  if (r.rating) {
    doc["rating"] = {{"value", r.rating->rating}, {"explanation", r.rating->explanation}};
  }
  return doc;
}

LedgerRecord record_from_json(const json& doc) {
  LedgerRecord r;
  r.instance_id = doc.at("instance_id").get<std::string>();
  const auto phase = phase_from_string(doc.at("phase").get<std::string>());
  if (!phase) throw LedgerError("unknown phase " + doc.at("phase").dump());
  r.phase = *phase;
  r.run_index = doc.at("run").get<int>();
  r.status = doc.at("status").get<std::string>() == "ok" ? RecordStatus::Ok
                                                         : RecordStatus::Excluded;
  r.reason = doc.value("reason", "");
  r.detail = doc.value("detail", "");
  r.prompt_digest = doc.value("prompt_digest", "");
  r.prompt_text = doc.value("prompt", "");
  r.raw_text = doc.value("raw", "");
  r.rejected_raw = doc.value("rejected_raw", std::vector<std::string>{});
  r.attempts = doc.value("attempts", 0);
  r.requeries = doc.value("requeries", 0);
  r.from_cache = doc.value("from_cache", false);
  if (auto it = doc.find("axiom"); it != doc.end()) {
    r.axiom = ParsedAxiom{it->value("type", ""), it->at("text").get<std::string>(),
                          it->value("sentences", 1)};
  }
  if (auto it = doc.find("label"); it != doc.end()) {
    const auto label = label_from_alias(it->at("label").get<std::string>());
    if (!label) throw LedgerError("bad label in ledger record");
    r.label = ParsedLabel{*label, it->value("explanation", "")};
  }
  if (auto it = doc.find("rating"); it != doc.end()) {
    r.rating = ParsedRating{it->at("value").get<int>(), it->value("explanation", "")};
  }
  return r;
}

json RunManifest::to_json() const {
  return {{"schema_version", kSchemaVersion},
          {"run_id", run_id},
          {"dataset", dataset},
          {"generation_model", generation_model},
          {"judge_model", judge_model},
          {"prompt_digests", prompt_digests},
          {"seed", seed ? json(*seed) : json()},
          {"runs", runs}};
}

RunManifest RunManifest::from_json(const json& doc) {
  if (doc.value("schema_version", 0) != kSchemaVersion) {
    throw LedgerError("unsupported manifest schema version");
  }
  RunManifest m;
  m.run_id = doc.at("run_id").get<std::string>();
  m.dataset = doc.value("dataset", json::object());
  m.generation_model = doc.at("generation_model").get<ModelConfig>();
  m.judge_model = doc.at("judge_model").get<ModelConfig>();
  m.prompt_digests = doc.at("prompt_digests").get<std::map<std::string, std::string>>();
  if (auto it = doc.find("seed"); it != doc.end() && !it->is_null()) {
    m.seed = it->get<std::uint64_t>();
  }
  m.runs = doc.at("runs").get<int>();
  return m;
}

std::string RunManifest::digest() const { return sha256_hex(to_json().dump()); }

std::string instances_digest(const std::vector<NliInstance>& instances) {
  std::ostringstream out;
  write_generic_jsonl(out, instances);
  return sha256_hex(out.str());
}

// --- RunLedger ---------------------------------------------------------------

using RecordKey = std::tuple<std::string, int, int>;

struct RunLedger::State {
  RunManifest manifest;
  std::vector<NliInstance> instances;
  std::map<std::string, std::size_t, std::less<>> instance_index;
  std::optional<fs::path> dir;

  mutable std::mutex mutex;
  std::map<RecordKey, LedgerRecord> records;
  std::ofstream out;
  std::size_t damaged = 0;

  void index_instances() {
    instance_index.clear();
    for (std::size_t i = 0; i < instances.size(); ++i) {
      if (!instance_index.emplace(instances[i].id, i).second) {
        throw LedgerError("duplicate instance id " + instances[i].id);
      }
    }
  }

  void insert(LedgerRecord record) {
    RecordKey key{record.instance_id, static_cast<int>(record.phase), record.run_index};
    records.insert_or_assign(std::move(key), std::move(record));
  }
};

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LedgerError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw LedgerError(path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw LedgerError("cannot write " + path.string());
}

void require_compatible(const RunManifest& stored, const RunManifest& wanted) {
  auto mismatch = [&](const std::string& what) {
    throw LedgerError("run '" + stored.run_id + "' was created with a different " + what +
                      "; use a new --run-id");
  };
  if (stored.runs != wanted.runs) mismatch("run count");
  if (stored.prompt_digests != wanted.prompt_digests) mismatch("prompt set");
  if (stored.dataset.value("instances_digest", "") !=
      wanted.dataset.value("instances_digest", "")) {
    mismatch("instance sample");
  }
  if (stored.generation_model.model_name != wanted.generation_model.model_name) {
    mismatch("generation model");
  }
  if (stored.judge_model.model_name != wanted.judge_model.model_name) {
    mismatch("judge model");
  }
}

}  // namespace

RunLedger::RunLedger(std::unique_ptr<State> state) : state_(std::move(state)) {}
RunLedger::RunLedger(RunLedger&&) noexcept = default;
RunLedger& RunLedger::operator=(RunLedger&&) noexcept = default;
RunLedger::~RunLedger() = default;

RunLedger RunLedger::in_memory(RunManifest manifest, std::vector<NliInstance> instances) {
  auto state = std::make_unique<State>();
  manifest.dataset["instances_digest"] = instances_digest(instances);
  state->manifest = std::move(manifest);
  state->instances = std::move(instances);
  state->index_instances();
  return RunLedger(std::move(state));
}

RunLedger RunLedger::create_or_resume(const fs::path& run_dir, RunManifest manifest,
                                      std::vector<NliInstance> instances) {
  manifest.dataset["instances_digest"] = instances_digest(instances);
  const fs::path manifest_path = run_dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    RunLedger existing = open(run_dir);
    require_compatible(existing.manifest(), manifest);
    return existing;
  }
  fs::create_directories(run_dir);
  save_generic_jsonl(run_dir / "instances.jsonl", instances);
  write_text_file(manifest_path, manifest.to_json().dump(2) + "\n");

  auto state = std::make_unique<State>();
  state->manifest = std::move(manifest);
  state->instances = std::move(instances);
  state->index_instances();
  state->dir = run_dir;
  state->out.open(run_dir / "records.jsonl", std::ios::binary | std::ios::app);
  if (!state->out) throw LedgerError("cannot open records.jsonl in " + run_dir.string());
  return RunLedger(std::move(state));
}

RunLedger RunLedger::open(const fs::path& run_dir) {
  auto state = std::make_unique<State>();
  state->manifest = RunManifest::from_json(read_json_file(run_dir / "manifest.json"));
  try {
    state->instances =
        load_dataset(run_dir / "instances.jsonl", DatasetFormat::GenericJsonl).instances;
  } catch (const DatasetError& e) {
    throw LedgerError(e.what());
  }
  state->index_instances();
  state->dir = run_dir;

  const fs::path records_path = run_dir / "records.jsonl";
  bool torn_tail = false;
  if (fs::exists(records_path)) {
    std::ifstream in(records_path, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      torn_tail = in.eof();  // last line had no terminating newline
      if (line.empty()) continue;
      try {
        state->insert(record_from_json(json::parse(line)));
      } catch (const std::exception&) {
        ++state->damaged;
      }
    }
  }
  state->out.open(records_path, std::ios::binary | std::ios::app);
  if (!state->out) throw LedgerError("cannot open records.jsonl in " + run_dir.string());
  // Close off a torn final write so the next record starts on its own line.
  if (torn_tail) state->out << '\n' << std::flush;
  return RunLedger(std::move(state));
}

const RunManifest& RunLedger::manifest() const { return state_->manifest; }
const std::vector<NliInstance>& RunLedger::instances() const { return state_->instances; }
std::optional<fs::path> RunLedger::directory() const { return state_->dir; }

const NliInstance* RunLedger::find_instance(std::string_view id) const {
  auto it = state_->instance_index.find(id);
  return it == state_->instance_index.end() ? nullptr : &state_->instances[it->second];
}

std::optional<LedgerRecord> RunLedger::find(std::string_view instance_id, Phase phase,
                                            int run_index) const {
  std::lock_guard lock(state_->mutex);
  auto it = state_->records.find(
      RecordKey{std::string(instance_id), static_cast<int>(phase), run_index});
  if (it == state_->records.end()) return std::nullopt;
  return it->second;
}

void RunLedger::append(LedgerRecord record) {
  if (!find_instance(record.instance_id)) {
    throw LedgerError("record references unknown instance " + record.instance_id);
  }
  std::lock_guard lock(state_->mutex);
  if (state_->out.is_open()) {
    state_->out << record_to_json(record).dump() << '\n';
    state_->out.flush();
    if (!state_->out) throw LedgerError("failed to append to records.jsonl");
  }
  state_->insert(std::move(record));
}

std::vector<LedgerRecord> RunLedger::snapshot() const {
  std::lock_guard lock(state_->mutex);
  std::vector<LedgerRecord> out;
  out.reserve(state_->records.size());
  for (const auto& [key, record] : state_->records) out.push_back(record);
  return out;
}

std::size_t RunLedger::size() const {
  std::lock_guard lock(state_->mutex);
  return state_->records.size();
}

std::size_t RunLedger::damaged_lines() const { return state_->damaged; }

}  // namespace axeval
