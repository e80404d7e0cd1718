#include "axeval/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace axeval {

std::size_t ExperimentStatus::total_pending() const {
  std::size_t total = 0;
  for (const auto& [phase, status] : phases) total += status.pending();
  return total;
}

std::size_t ExperimentStatus::total_excluded() const {
  std::size_t total = 0;
  for (const auto& [phase, status] : phases) total += status.excluded;
  return total;
}

ExperimentStatus compute_status(const RunLedger& ledger) {
  const std::size_t n = ledger.instances().size();
  const auto runs = static_cast<std::size_t>(ledger.manifest().runs);
  ExperimentStatus status;
  for (Phase phase : kAllPhases) {
    std::size_t expected = n * runs;
    if (phase == Phase::JudgeHelpP1 || phase == Phase::JudgeHelpP3) expected = n;
    if (phase == Phase::JudgeConsP1 || phase == Phase::JudgeConsP3) expected = n * (runs - 1);
    status.phases[phase].expected = expected;
  }
  for (const auto& record : ledger.snapshot()) {
    auto& phase = status.phases[record.phase];
    (record.ok() ? phase.completed : phase.excluded) += 1;
  }
  return status;
}

namespace {

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

bool needs_work(const std::optional<LedgerRecord>& existing, bool upstream_ok) {
  if (!existing) return true;
  if (existing->ok()) return false;
  if (starts_with(existing->reason, kReasonGatewayPrefix)) return true;
  return existing->reason == kReasonUpstream && upstream_ok;
}

// Runs fn(i) for i in [0, count) on up to `workers` threads; the first
// exception is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  {
    std::vector<std::jthread> threads;
    for (std::size_t t = 1; t < workers; ++t) threads.emplace_back(work);
    work();
  }
  if (error) std::rethrow_exception(error);
}

// Parses raw text into the record; returns the failure, if any.
using RecordParser = std::function<std::optional<ParseError>(std::string_view, LedgerRecord&)>;

std::optional<ParseError> parse_p1(std::string_view raw, LedgerRecord& record) {
  auto parsed = parse_axiom(raw);
  if (!parsed) return parsed.error();
  record.axiom = *parsed;
  return std::nullopt;
}

std::optional<ParseError> parse_p2(std::string_view raw, LedgerRecord& record) {
  auto parsed = parse_label(raw);
  if (!parsed) return parsed.error();
  record.label = *parsed;
  return std::nullopt;
}

std::optional<ParseError> parse_p3(std::string_view raw, LedgerRecord& record) {
  auto parsed = parse_label_with_explanation(raw);
  if (!parsed) return parsed.error();
  record.label = *parsed;
  return std::nullopt;
}

std::optional<ParseError> parse_judge(std::string_view raw, LedgerRecord& record) {
  auto parsed = parse_rating(raw);
  if (!parsed) return parsed.error();
  record.rating = *parsed;
  return std::nullopt;
}

struct Counters {
  std::atomic<std::size_t> executed{0};
  std::atomic<std::size_t> skipped{0};
  std::atomic<std::size_t> excluded{0};

  PhaseOutcome outcome() const { return {executed.load(), skipped.load(), excluded.load()}; }
};

LedgerRecord base_record(const NliInstance& instance, Phase phase, int run) {
  LedgerRecord record;
  record.instance_id = instance.id;
  record.phase = phase;
  record.run_index = run;
  return record;
}

LedgerRecord upstream_excluded(const NliInstance& instance, Phase phase, int run,
                               std::string detail) {
  LedgerRecord record = base_record(instance, phase, run);
  record.status = RecordStatus::Excluded;
  record.reason = std::string(kReasonUpstream);
  record.detail = std::move(detail);
  return record;
}

// One model interaction: cached completion, parse, and on a parse failure a
// single fresh re-query before the record is excluded.
LedgerRecord execute(Gateway& gateway, const ModelConfig& model, bool use_cache,
                     const NliInstance& instance, Phase phase, int run,
                     RenderedPrompt prompt, const RecordParser& parse) {
  LedgerRecord record = base_record(instance, phase, run);
  record.prompt_text = prompt.text;
  record.prompt_digest = prompt.slot_digest;
  const CompletionRequest request{std::move(prompt), model, run};
  auto fetch = [&] {
    return use_cache ? gateway.cached_complete(request) : gateway.complete(request);
  };
  try {
    CompletionResult result = fetch();
    record.attempts = result.from_cache ? 0 : result.attempt_count;
    record.from_cache = result.from_cache;
    record.raw_text = result.raw_text;
    auto failure = parse(record.raw_text, record);
    if (failure) {
      record.rejected_raw.push_back(record.raw_text);
      gateway.invalidate(request);
      result = fetch();
      record.requeries = 1;
      record.attempts += result.from_cache ? 0 : result.attempt_count;
      record.from_cache = result.from_cache;
      record.raw_text = result.raw_text;
      failure = parse(record.raw_text, record);
    }
    if (failure) {
      record.status = RecordStatus::Excluded;
      record.reason = std::string(kReasonParsePrefix) + std::string(to_string(*failure));
    }
  } catch (const GatewayError& e) {
    record.status = RecordStatus::Excluded;
    record.reason = std::string(kReasonGatewayPrefix) + std::string(to_string(e.kind()));
    record.detail = e.what();
    record.attempts += e.attempts();
  }
  return record;
}

// Judged text for a source: the P1 axiom, or the P3 explanation.
std::optional<std::string> source_text(const std::optional<LedgerRecord>& record,
                                       AxiomSource source) {
  if (!record || !record->ok()) return std::nullopt;
  if (source == AxiomSource::P1) {
    if (record->axiom) return record->axiom->axiom;
    return std::nullopt;
  }
  if (record->label && !record->label->explanation.empty()) return record->label->explanation;
  return std::nullopt;
}

void require_records(const RunLedger& ledger, std::initializer_list<Phase> phases,
                     std::string_view needed_by) {
  const int runs = ledger.manifest().runs;
  std::size_t missing = 0;
  for (const auto& instance : ledger.instances()) {
    for (Phase phase : phases) {
      for (int run = 1; run <= runs; ++run) {
        if (!ledger.find(instance.id, phase, run)) ++missing;
      }
    }
  }
  if (missing > 0) {
    std::string names;
    for (Phase phase : phases) names += (names.empty() ? "" : ", ") + std::string(to_string(phase));
    throw PreconditionError(std::string(needed_by) + " requires completed " + names + " (" +
                            std::to_string(missing) +
                            " records missing); run the generate phase first");
  }
}

}  // namespace

Experiment::Experiment(const PromptLibrary& prompts, RunLedger& ledger, Gateway& generator,
                       Gateway& judge, ExperimentOptions options)
    : prompts_(prompts),
      ledger_(ledger),
      generator_(generator),
      judge_(judge),
      options_(options) {
  if (ledger_.manifest().runs < 1) throw std::invalid_argument("run count must be >= 1");
}

PhaseOutcome Experiment::run_generation() {
  Counters counters;
  const int runs = ledger_.manifest().runs;
  const ModelConfig& model = ledger_.manifest().generation_model;
  const auto& instances = ledger_.instances();
  parallel_for(instances.size(), options_.workers, [&](std::size_t i) {
    const NliInstance& instance = instances[i];
    for (int run = 1; run <= runs; ++run) {
      for (Phase phase : {Phase::P1, Phase::P3}) {
        if (!needs_work(ledger_.find(instance.id, phase, run), true)) {
          ++counters.skipped;
          continue;
        }
        LedgerRecord record =
            phase == Phase::P1
                ? execute(generator_, model, options_.use_cache, instance, phase, run,
                          prompts_.render_p1(instance), parse_p1)
                : execute(generator_, model, options_.use_cache, instance, phase, run,
                          prompts_.render_p3(instance), parse_p3);
        ++counters.executed;
        if (!record.ok()) ++counters.excluded;
        ledger_.append(std::move(record));
      }
    }
  });
  return counters.outcome();
}

PhaseOutcome Experiment::run_inference_with_axioms() {
  require_records(ledger_, {Phase::P1}, "axiom-augmented inference");
  Counters counters;
  const int runs = ledger_.manifest().runs;
  const ModelConfig& model = ledger_.manifest().generation_model;
  const auto& instances = ledger_.instances();
  parallel_for(instances.size(), options_.workers, [&](std::size_t i) {
    const NliInstance& instance = instances[i];
    for (int run = 1; run <= runs; ++run) {
      const auto axiom = source_text(ledger_.find(instance.id, Phase::P1, run), AxiomSource::P1);
      if (!needs_work(ledger_.find(instance.id, Phase::P2, run), axiom.has_value())) {
        ++counters.skipped;
        continue;
      }
      LedgerRecord record =
          axiom ? execute(generator_, model, options_.use_cache, instance, Phase::P2, run,
                          prompts_.render_p2(instance, *axiom), parse_p2)
                : upstream_excluded(instance, Phase::P2, run,
                                    "P1 run " + std::to_string(run) + " excluded");
      ++counters.executed;
      if (!record.ok()) ++counters.excluded;
      ledger_.append(std::move(record));
    }
  });
  return counters.outcome();
}

PhaseOutcome Experiment::run_judging() {
  require_records(ledger_, {Phase::P1, Phase::P3}, "judging");
  Counters counters;
  const int runs = ledger_.manifest().runs;
  const ModelConfig& model = ledger_.manifest().judge_model;
  const auto& instances = ledger_.instances();
  parallel_for(instances.size(), options_.workers, [&](std::size_t i) {
    const NliInstance& instance = instances[i];
    for (AxiomSource source : {AxiomSource::P1, AxiomSource::P3}) {
      const Phase generated = source == AxiomSource::P1 ? Phase::P1 : Phase::P3;
      const auto reference = source_text(ledger_.find(instance.id, generated, 1), source);

      const Phase help = help_phase(source);
      if (!needs_work(ledger_.find(instance.id, help, 1), reference.has_value())) {
        ++counters.skipped;
      } else {
        LedgerRecord record =
            reference
                ? execute(judge_, model, options_.use_cache, instance, help, 1,
                          prompts_.render_judge_helpfulness(instance, *reference,
                                                            instance.gold_label),
                          parse_judge)
                : upstream_excluded(instance, help, 1, "run-1 axiom excluded");
        ++counters.executed;
        if (!record.ok()) ++counters.excluded;
        ledger_.append(std::move(record));
      }

      const Phase cons = cons_phase(source);
      for (int j = 2; j <= runs; ++j) {
        const auto later = source_text(ledger_.find(instance.id, generated, j), source);
        const bool usable = reference && later;
        if (!needs_work(ledger_.find(instance.id, cons, j), usable)) {
          ++counters.skipped;
          continue;
        }
        LedgerRecord record =
            usable ? execute(judge_, model, options_.use_cache, instance, cons, j,
                             prompts_.render_judge_consistency(instance, *reference, *later),
                             parse_judge)
                   : upstream_excluded(instance, cons, j,
                                       reference ? "run-" + std::to_string(j) + " axiom excluded"
                                                 : std::string("run-1 axiom excluded"));
        ++counters.executed;
        if (!record.ok()) ++counters.excluded;
        ledger_.append(std::move(record));
      }
    }
  });
  return counters.outcome();
}

}  // namespace axeval
