#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>

#include "axeval/gateway.hpp"
#include "axeval/ledger.hpp"
#include "axeval/prompts.hpp"

namespace axeval {

/// A phase was started before the phases it depends on finished.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PhaseStatus {
  std::size_t expected = 0;
  std::size_t completed = 0;
  std::size_t excluded = 0;
  std::size_t pending() const { return expected - completed - excluded; }
};

/// Record counts per phase. Generation phases expect N*R records, each
/// helpfulness phase N and each consistency phase N*(R-1).
struct ExperimentStatus {
  std::map<Phase, PhaseStatus> phases;

  std::size_t total_pending() const;
  std::size_t total_excluded() const;
};

ExperimentStatus compute_status(const RunLedger& ledger);

struct PhaseOutcome {
  std::size_t executed = 0;  // records written by this call
  std::size_t skipped = 0;   // already complete in the ledger
  std::size_t excluded = 0;  // written as Excluded by this call
};

struct ExperimentOptions {
  std::size_t workers = 4;
  bool use_cache = true;
};

/// Drives the generation, axiom-augmented inference and judging phases
/// over a RunLedger. Instances are processed concurrently; runs of one
/// instance are issued in order. Every phase skips records already in the
/// ledger, so re-running a finished phase does nothing.
class Experiment {
 public:
  Experiment(const PromptLibrary& prompts, RunLedger& ledger, Gateway& generator,
             Gateway& judge, ExperimentOptions options = {});

  /// R axiom-generation (P1) and R direct-inference (P3) records per instance.
  PhaseOutcome run_generation();

  /// P2 for run k uses the run-k P1 axiom. Requires every P1 record.
  PhaseOutcome run_inference_with_axioms();

  /// Per source (P1 axioms, P3 explanations): one helpfulness rating of the
  /// run-1 axiom and R-1 similarity ratings of run 1 against runs 2..R.
  /// Requires every P1 and P3 record.
  PhaseOutcome run_judging();

 private:
  const PromptLibrary& prompts_;
  RunLedger& ledger_;
  Gateway& generator_;
  Gateway& judge_;
  ExperimentOptions options_;
};

}  // namespace axeval
