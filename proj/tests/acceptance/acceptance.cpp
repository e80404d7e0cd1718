// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../oracle/compare.hpp"
#include "axeval/app.hpp"
#include "axeval/dataset.hpp"
#include "axeval/metrics.hpp"
#include "axeval/parse.hpp"
#include "axeval/report.hpp"
#include "axeval/stub_backend.hpp"

namespace fs = std::filesystem;
using namespace axeval;
using nlohmann::json;

namespace {

// Collects failures for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream msg;
    msg.precision(6);
    msg << std::fixed << what << ": got " << got << ", want " << want << " +/- " << tol;
    expect(std::fabs(got - want) <= tol + 1e-12, msg.str());
  }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    std::string out = std::to_string(failed_) + " failed";
    for (const auto& f : failures_) out += "\n      " + f;
    return out;
  }

 private:
  std::vector<std::string> failures_;
  int failed_ = 0;
};

// ---------------------------------------------------------------------------
// Published values. Factuality/consistency columns: SNLI P1, SNLI P3,
// ANLI P1, ANLI P3.

struct PublishedSummary {
  const char* column;
  double cr, wr, ncr, c_correct, c_wrong, nccr;
};

constexpr PublishedSummary kOverall[] = {
    {"SNLI P1", 0.6995, 0.3005, 0.399, 0.7328, 0.7017, 0.3017},
    {"SNLI P3", 0.8265, 0.1735, 0.653, 0.8734, 0.7363, 0.5941},
    {"ANLI P1", 0.787, 0.213, 0.574, 0.7318, 0.6197, 0.4439},
    {"ANLI P3", 0.8, 0.2, 0.6, 0.8795, 0.7793, 0.5477},
};

constexpr PublishedSummary kByClass[] = {
    {"SNLI Entailment P1", 0.9404, 0.0595, 0.8809, 0.8904, 0.878, 0.7851},
    {"SNLI Entailment P3", 0.9622, 0.0377, 0.9245, 0.9012, 0.5961, 0.8447},
    {"SNLI Contradiction P1", 0.8986, 0.1013, 0.7972, 0.8923, 0.7234, 0.7284},
    {"SNLI Contradiction P3", 0.9431, 0.0568, 0.8863, 0.888, 0.6621, 0.7999},
    {"SNLI Neutral P1", 0.2515, 0.7484, -0.4969, 0.8162, 0.7712, -0.3719},
    {"SNLI Neutral P3", 0.5696, 0.4303, 0.1393, 0.8005, 0.7588, 0.1295},
    {"ANLI Entailment P1", 0.8806, 0.1193, 0.7613, 0.7717, 0.5733, 0.6112},
    {"ANLI Entailment P3", 0.7574, 0.2425, 0.5149, 0.8976, 0.7339, 0.5019},
    {"ANLI Contradiction P1", 0.8683, 0.1316, 0.7367, 0.6751, 0.5584, 0.5128},
    {"ANLI Contradiction P3", 0.9111, 0.0888, 0.8222, 0.9024, 0.8076, 0.7504},
    {"ANLI Neutral P1", 0.6009, 0.399, 0.2018, 0.7364, 0.6546, 0.1812},
    {"ANLI Neutral P3", 0.75, 0.25, 0.5, 0.8322, 0.8229, 0.4184},
};

// Mean error counts in kErrorCells order (E->C, E->N, C->E, C->N, N->E,
// N->C) and the mean accuracies (E, C, N, overall) for the same column.
struct PublishedErrors {
  const char* column;
  ClassCounts counts;
  std::array<double, 6> mean_errors;
  std::array<double, 4> accuracy;
};

constexpr PublishedErrors kErrors[] = {
    {"SNLI P1+P2", kSnliTargets, {4.8, 4.2, 20.6, 198.6, 437.8, 33.6}, {98.69, 66.32, 28.57, 65.02}},
    {"SNLI P3", kSnliTargets, {6.4, 27.8, 5.8, 232.6, 283.8, 30.6}, {95.03, 63.37, 52.36, 70.64}},
    {"ANLI P1+P2", kAnliTargets, {54.8, 70.8, 92.4, 105.6, 215.4, 177.0}, {83.70, 66.15, 39.06, 64.20}},
    {"ANLI P3", kAnliTargets, {108.2, 101.6, 52.6, 83.0, 139.4, 257.0}, {72.78, 76.82, 38.44, 62.91}},
};

void check_summary_identities(Check& check, const PublishedSummary& s, double tol) {
  const std::string col = s.column;
  check.near(net_correct_rate(s.cr, s.wr), s.ncr, tol, col + " NCR");
  check.near(net_consistently_correct_rate(s.c_correct, s.cr, s.c_wrong, s.wr), s.nccr, tol,
             col + " NCCR");
}

// 1 ------------------------------------------------------------------------
Check overall_formulas() {
  Check check;
  for (const auto& s : kOverall) check_summary_identities(check, s, 0.0001);

  // The SNLI P1 correct rate as an annotation fixture: 1399 of 2000 helpful.
  std::vector<int> h(2000, 0);
  std::fill(h.begin(), h.begin() + 1399, 1);
  const FactualitySummary f = factuality_summary(h);
  check.near(f.cr, 0.6995, 0.0001, "fixture CR");
  check.near(f.wr, 0.3005, 0.0001, "fixture WR");
  check.near(f.ncr, 0.399, 0.0001, "fixture NCR");
  return check;
}

// 2 ------------------------------------------------------------------------
Check per_class_formulas() {
  Check check;
  for (const auto& s : kByClass) check_summary_identities(check, s, 0.0005);
  return check;
}

// 3 ------------------------------------------------------------------------
Check error_counts_to_accuracy() {
  Check check;
  for (const auto& column : kErrors) {
    ErrorTally tally;
    tally.counts = column.counts;
    for (std::size_t i = 0; i < kErrorCells.size(); ++i) {
      const auto [g, p] = kErrorCells[i];
      tally.cells[label_index(g)][label_index(p)] = column.mean_errors[i];
    }
    const AccuracyRow row = accuracy_of(tally);
    const std::string col = column.column;
    for (InferenceLabel g : kAllLabels) {
      check.near(row.per_class[label_index(g)], column.accuracy[label_index(g)], 0.02,
                 col + " " + std::string(to_string(g)));
    }
    check.near(row.overall, column.accuracy[3], 0.02, col + " overall");
  }
  return check;
}

// 4 ------------------------------------------------------------------------
Check oracle_equivalence() {
  Check check;
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> threshold(1, 10);
  constexpr int kLedgers = 1200;
  for (int i = 0; i < kLedgers; ++i) {
    testing::SyntheticOptions options;
    options.exclude_rate = i % 3 == 0 ? 0.0 : 0.04;
    const auto data = testing::random_ledger(rng, options);
    // Mostly the default thresholds, some random ones.
    Thresholds t;
    if (i % 4 == 3) t = {threshold(rng), threshold(rng)};
    const std::string diff = oracle::compare_with_oracle(data, t);
    check.expect(diff.empty(), "ledger " + std::to_string(i) + ": " + diff);
  }
  return check;
}

// 5 ------------------------------------------------------------------------
Check threshold_suite() {
  Check check;
  check.expect(binarize_helpfulness(5) == 0, "r_h = 5 -> h = 0");
  check.expect(binarize_helpfulness(6) == 1, "r_h = 6 -> h = 1");
  check.expect(binarize_consistency(7) == 0, "r_c = 7 -> c = 0");
  check.expect(binarize_consistency(8) == 1, "r_c = 8 -> c = 1");
  check.expect(binarize_helpfulness(10) == 1 && binarize_consistency(1) == 0, "extremes");
  for (int bad : {0, 11, -3}) {
    bool threw = false;
    try {
      binarize_helpfulness(bad);
    } catch (const std::out_of_range&) {
      threw = true;
    }
    check.expect(threw, "rating " + std::to_string(bad) + " rejected");
  }

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> rating(1, 10);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> ratings(1 + trial % 50);
    for (auto& r : ratings) r = rating(rng);
    double previous_cr = 2.0;
    for (int t = 1; t <= 10; ++t) {
      std::vector<int> h;
      for (int r : ratings) h.push_back(binarize_helpfulness(r, t));
      const double cr = factuality_summary(h).cr;
      check.expect(cr <= previous_cr, "CR rose when threshold_h reached " + std::to_string(t));
      previous_cr = cr;
    }

    std::vector<ConsistencyAnnotation> cons;
    for (int j = 2; j <= 5; ++j) cons.push_back({"x", AxiomSource::P1, j, rating(rng)});
    double previous_cons = 2.0;
    for (int t = 1; t <= 10; ++t) {
      const double score = consistency_score(cons, 5, t);
      check.expect(score <= previous_cons,
                   "Cons rose when threshold_c reached " + std::to_string(t));
      previous_cons = score;
    }
  }

  // The same property through the full report on random ledgers.
  for (int trial = 0; trial < 50; ++trial) {
    testing::SyntheticOptions options;
    options.exclude_rate = 0;
    const RunLedger ledger = testing::to_run_ledger(testing::random_ledger(rng, options));
    double previous = 2.0;
    for (int t = 1; t <= 10; ++t) {
      ReportOptions report_options;
      report_options.thresholds = {t, 8};
      const auto report = build_report(ledger, report_options);
      const double cr = report.factuality.at(AxiomSource::P1).overall.factuality.cr;
      check.expect(cr <= previous, "report CR rose at threshold " + std::to_string(t));
      previous = cr;
    }
  }
  return check;
}

// 6 ------------------------------------------------------------------------
std::vector<NliInstance> e2e_instances() {
  std::vector<NliInstance> instances;
  const char* subjects[] = {"A woman", "A man", "Two children", "A dog", "An old chef"};
  const char* actions[] = {"is drinking coffee", "plays a guitar on stage",
                           "runs along the beach", "sleeps on a couch"};
  for (int i = 0; i < 20; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "e2e-%03d", i);
    NliInstance instance;
    instance.id = id;
    instance.premise = std::string(subjects[i % 5]) + " " + actions[i % 4] + ".";
    instance.hypothesis = std::string(subjects[(i + 1) % 5]) + " is outside (case " +
                          std::to_string(i) + ").";
    instance.gold_label = kAllLabels[static_cast<std::size_t>(i % 3)];
    instances.push_back(instance);
  }
  return instances;
}

std::shared_ptr<StubBackend> scripted_stub(const std::vector<NliInstance>& instances) {
  auto stub = std::make_shared<StubBackend>();
  // One direct-inference answer is unusable on first sight and fixed on the
  // re-query; one helpfulness rating is pinned.
  const std::string hyp7 = "Hypothesis: " + instances[7].hypothesis;
  stub->on(
      [hyp7](const ChatRequest& r) {
        return r.user_message.find("Format the response as:") != std::string::npos &&
               r.user_message.find(hyp7) != std::string::npos;
      },
      std::vector<BackendReply>{BackendReply::ok("I am not sure."),
                                BackendReply::ok("Neutral: The premise says nothing about it.")},
      "direct inference, instance 7");
  const std::string hyp3 = "Hypothesis: " + instances[3].hypothesis;
  stub->on(
      [hyp3](const ChatRequest& r) {
        return r.user_message.find("Rate how helpful") != std::string::npos &&
               r.user_message.find(hyp3) != std::string::npos;
      },
      std::vector<BackendReply>{BackendReply::ok("Rating: 10")}, "helpfulness, instance 3");
  stub->set_fallback(synthetic_reply);
  return stub;
}

ExperimentConfig e2e_config(const fs::path& out, std::shared_ptr<ChatBackend> backend) {
  ExperimentConfig config;
  config.out_dir = out;
  config.run_id = "e2e";
  config.instances = e2e_instances();
  config.runs = 5;
  config.generation_model.model_name = "stub-generator";
  config.judge_model.model_name = "stub-judge";
  config.generation_backend = backend;
  config.judge_backend = backend;
  config.options.workers = 4;
  config.gateway.sleep = [](std::chrono::milliseconds) {};
  return config;
}

std::string report_json(const fs::path& out) {
  const RunLedger ledger = RunLedger::open(run_directory(out, "e2e"));
  return report_to_json(build_report(ledger)).dump(2);
}

Check end_to_end() {
  Check check;
  const fs::path out = fs::temp_directory_path() / "axeval_acceptance_e2e";
  fs::remove_all(out);
  const auto instances = e2e_instances();

  auto first_stub = scripted_stub(instances);
  const RunSummary first = run_experiment(e2e_config(out, first_stub), RunPhase::All);
  check.expect(first_stub->call_count() > 0, "first execution reached the backend");

  {
    const RunLedger ledger = RunLedger::open(first.run_dir);
    std::map<Phase, int> counts;
    int requeried = 0;
    for (const auto& r : ledger.snapshot()) {
      ++counts[r.phase];
      check.expect(r.ok(), "record " + r.instance_id + " " + std::string(to_string(r.phase)) +
                               " excluded: " + r.reason);
      requeried += r.requeries;
    }
    check.expect(counts[Phase::P1] == 100, "100 P1 records");
    check.expect(counts[Phase::P2] == 100, "100 P2 records");
    check.expect(counts[Phase::P3] == 100, "100 P3 records");
    for (AxiomSource s : {AxiomSource::P1, AxiomSource::P3}) {
      const std::string name(to_string(s));
      check.expect(counts[help_phase(s)] == 20, name + ": 20 helpfulness annotations");
      check.expect(counts[cons_phase(s)] == 80, name + ": 80 consistency annotations");
    }
    check.expect(requeried == 1, "exactly one re-query, got " + std::to_string(requeried));
    auto pinned = ledger.find(instances[3].id, Phase::JudgeHelpP1, 1);
    check.expect(pinned && pinned->rating && pinned->rating->rating == 10,
                 "scripted rating recorded");
  }
  const std::string report_one = report_json(out);

  // Second execution over the same output directory.
  auto second_stub = scripted_stub(instances);
  const RunSummary second = run_experiment(e2e_config(out, second_stub), RunPhase::All);
  check.expect(second_stub->call_count() == 0,
               "second execution made " + std::to_string(second_stub->call_count()) + " calls");
  check.expect(second.status.total_pending() == 0, "nothing pending after second execution");
  check.expect(report_json(out) == report_one, "reports byte-identical after second execution");

  // Rebuilding the ledger from scratch is served entirely by the cache.
  fs::remove_all(out / "runs");
  auto third_stub = scripted_stub(instances);
  run_experiment(e2e_config(out, third_stub), RunPhase::All);
  check.expect(third_stub->call_count() == 0, "cache-only rebuild made no calls");
  check.expect(report_json(out) == report_one, "rebuilt ledger reproduces the report");

  // A fresh output directory reproduces the same numbers.
  const fs::path other = fs::temp_directory_path() / "axeval_acceptance_e2e_b";
  fs::remove_all(other);
  run_experiment(e2e_config(other, scripted_stub(instances)), RunPhase::All);
  check.expect(report_json(other) == report_one, "independent execution reproduces the report");
  fs::remove_all(other);
  fs::remove_all(out);
  return check;
}

// 7 ------------------------------------------------------------------------
Check parser_corpus() {
  Check check;
  std::ifstream in(AXEVAL_FIXTURE_DIR "/parser_corpus.json");
  check.expect(static_cast<bool>(in), "corpus file readable");
  if (!in) return check;
  const json corpus = json::parse(in);
  const auto& cases = corpus.at("cases");
  check.expect(cases.size() >= 50, "at least 50 fixtures, found " + std::to_string(cases.size()));

  for (const auto& c : cases) {
    const std::string name = c.at("name");
    const std::string parser = c.at("parser");
    const std::string raw = c.at("raw");
    const std::string want_error = c.value("error", "");
    const json expect = c.value("expect", json::object());

    std::optional<ParseError> error;
    if (parser == "axiom") {
      auto p = parse_axiom(raw);
      if (!p) {
        error = p.error();
      } else if (want_error.empty()) {
        check.expect(p->axiom == expect.at("axiom").get<std::string>(), name + ": axiom text");
        check.expect(p->knowledge_type == expect.at("type").get<std::string>(), name + ": type");
        check.expect(p->sentence_count == expect.at("sentences").get<int>(), name + ": sentences");
      }
    } else if (parser == "label" || parser == "label_explained") {
      auto p = parser == "label" ? parse_label(raw) : parse_label_with_explanation(raw);
      if (!p) {
        error = p.error();
      } else if (want_error.empty()) {
        check.expect(std::string(to_string(p->label)) == expect.at("label").get<std::string>(),
                     name + ": label");
        check.expect(p->explanation == expect.at("explanation").get<std::string>(),
                     name + ": explanation '" + p->explanation + "'");
      }
    } else if (parser == "rating") {
      auto p = parse_rating(raw);
      if (!p) {
        error = p.error();
      } else if (want_error.empty()) {
        check.expect(p->rating == expect.at("rating").get<int>(), name + ": rating");
        check.expect(p->explanation == expect.at("explanation").get<std::string>(),
                     name + ": explanation '" + p->explanation + "'");
      }
    } else {
      check.expect(false, name + ": unknown parser " + parser);
      continue;
    }
    if (want_error.empty()) {
      check.expect(!error, name + ": unexpected " +
                               (error ? std::string(to_string(*error)) : std::string()));
    } else {
      check.expect(error && to_string(*error) == want_error,
                   name + ": expected " + want_error);
    }
  }
  return check;
}

// 8 ------------------------------------------------------------------------
std::vector<NliInstance> synthetic_corpus(std::size_t e, std::size_t c, std::size_t n) {
  std::vector<NliInstance> corpus;
  std::mt19937_64 rng(99);
  std::vector<InferenceLabel> labels;
  labels.insert(labels.end(), e, InferenceLabel::Entailment);
  labels.insert(labels.end(), c, InferenceLabel::Contradiction);
  labels.insert(labels.end(), n, InferenceLabel::Neutral);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    corpus.push_back({"c" + std::to_string(i), "premise " + std::to_string(i),
                      "hypothesis " + std::to_string(i), labels[i], DatasetSource::Other});
  }
  return corpus;
}

Check sampling_determinism() {
  Check check;
  const auto corpus = synthetic_corpus(3400, 3300, 3300);
  check.expect(corpus.size() == 10000, "corpus has 10k instances");
  for (const ClassCounts& targets : {kSnliTargets, kAnliTargets}) {
    const auto a = sample_stratified(corpus, targets, 7);
    const auto b = sample_stratified(corpus, targets, 7);
    const auto c = sample_stratified(corpus, targets, 8);
    check.expect(class_distribution(a) == targets, "exact class counts");
    check.expect(a == b, "same seed, same sample");
    check.expect(a != c, "different seed, different sample");
    std::set<std::string> ids;
    for (const auto& x : a) ids.insert(x.id);
    check.expect(ids.size() == a.size(), "no instance drawn twice");
  }

  const auto short_corpus = synthetic_corpus(3400, 500, 3300);
  try {
    sample_stratified(short_corpus, kAnliTargets, 7);
    check.expect(false, "undersupplied class accepted");
  } catch (const InsufficientClassError& e) {
    check.expect(e.label() == InferenceLabel::Contradiction, "shortfall names Contradiction");
    check.expect(e.shortfall() == 85, "shortfall of 85");
    check.expect(std::string(e.what()).find("Contradiction") != std::string::npos,
                 "message names the class");
  }
  return check;
}

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;  // 0 = no runtime bound
  std::function<Check()> run;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "factuality/consistency formulas reproduce the overall table (+/-0.0001)", 1.0,
       overall_formulas},
      {2, "per-class formulas reproduce all 12 cells (+/-0.0005)", 1.0, per_class_formulas},
      {3, "mean error counts reproduce the accuracy table (+/-0.02)", 1.0, error_counts_to_accuracy},
      {4, "metrics equal a naive recomputation on 1200 random ledgers", 30.0, oracle_equivalence},
      {5, "threshold boundaries and monotonicity", 0, threshold_suite},
      {6, "end-to-end stub run, resumable and reproducible", 10.0, end_to_end},
      {7, "parser corpus", 0, parser_corpus},
      {8, "stratified sampling is exact and seed-deterministic", 0, sampling_determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Check result;
    std::string crash;
    try {
      result = c.run();
    } catch (const std::exception& e) {
      crash = e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_seconds == 0 || seconds < c.budget_seconds;
    const bool pass = crash.empty() && result.ok() && in_time;
    std::ostringstream line;
    line.precision(3);
    line << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.title << " (" << std::fixed
         << seconds << " s)";
    if (!crash.empty()) line << "\n      exception: " << crash;
    if (!result.ok()) line << "\n      " << result.summary();
    if (!in_time) line << "\n      over the " << c.budget_seconds << " s budget";
    std::cout << line.str() << std::endl;
    if (!pass) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
