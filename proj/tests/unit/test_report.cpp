#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "axeval/report.hpp"
#include "helpers.hpp"

using namespace axeval;

namespace {

constexpr auto E = InferenceLabel::Entailment;
constexpr auto C = InferenceLabel::Contradiction;
constexpr auto N = InferenceLabel::Neutral;

LedgerRecord ok_record(const std::string& id, Phase phase, int run) {
  LedgerRecord r;
  r.instance_id = id;
  r.phase = phase;
  r.run_index = run;
  r.raw_text = "x";
  return r;
}

// 2000 instances with the SNLI class sizes. P2 errors per run reproduce the
// published mean cell counts (4.8, 4.2, 20.6, 198.6, 437.8, 33.6); P3 is
// always right. No judge records exist.
RunLedger snli_error_ledger() {
  std::vector<NliInstance> instances;
  auto add = [&](InferenceLabel label, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      instances.push_back(unit::instance("s" + std::to_string(instances.size() + 10000), "p",
                                         "h", label));
    }
  };
  add(E, kSnliTargets.entailment);
  add(C, kSnliTargets.contradiction);
  add(N, kSnliTargets.neutral);

  RunManifest m;
  m.run_id = "snli-errors";
  m.runs = 5;
  m.generation_model.model_name = "gen";
  m.judge_model.model_name = "judge";
  auto ledger = RunLedger::in_memory(m, instances);

  // errors[cell][run], cells in E->C, E->N, C->E, C->N, N->E, N->C order.
  const int errors[6][5] = {{4, 4, 4, 6, 6},           {4, 4, 4, 4, 5},
                            {20, 20, 21, 21, 21},      {198, 199, 199, 199, 198},
                            {437, 438, 438, 438, 438}, {33, 34, 34, 33, 34}};
  for (int run = 1; run <= 5; ++run) {
    std::map<std::string, InferenceLabel> predicted;
    std::array<std::size_t, 3> next{};  // next unused instance offset per gold class
    const std::size_t start[3] = {0, kSnliTargets.entailment,
                                  kSnliTargets.entailment + kSnliTargets.contradiction};
    for (std::size_t cell = 0; cell < kErrorCells.size(); ++cell) {
      const auto [g, p] = kErrorCells[cell];
      for (int i = 0; i < errors[cell][run - 1]; ++i) {
        const auto gi = label_index(g);
        predicted[instances[start[gi] + next[gi]++].id] = p;
      }
    }
    for (const auto& inst : instances) {
      auto p1 = ok_record(inst.id, Phase::P1, run);
      p1.axiom = ParsedAxiom{"", "An axiom.", 1};
      ledger.append(p1);
      auto p2 = ok_record(inst.id, Phase::P2, run);
      const auto it = predicted.find(inst.id);
      p2.label = ParsedLabel{it == predicted.end() ? inst.gold_label : it->second, ""};
      ledger.append(p2);
      auto p3 = ok_record(inst.id, Phase::P3, run);
      p3.label = ParsedLabel{inst.gold_label, "Because."};
      ledger.append(p3);
    }
  }
  return ledger;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("judging skipped: prediction tables only, with a warning") {
  const auto ledger = snli_error_ledger();
  const auto report = build_report(ledger);
  CHECK(report.factuality.empty());
  CHECK(report.predictions.size() == 2);
  bool warned = false;
  for (const auto& w : report.warnings) warned |= w.find("factuality") != std::string::npos;
  CHECK(warned);

  const auto doc = report_to_json(report);
  CHECK(doc["factuality"]["P1"].is_null());
  CHECK(doc["class_counts"]["total"] == 2000);

  const auto& acc = doc["accuracy"]["P1+P2"];
  // Published accuracies, within their rounding slack.
  CHECK(std::abs(acc["Entailment"]["mean"].get<double>() - 98.69) <= 0.02);
  CHECK(std::abs(acc["Neutral"]["mean"].get<double>() - 28.57) <= 0.02);
  CHECK(std::abs(acc["Overall"]["mean"].get<double>() - 65.02) <= 0.02);
  CHECK(doc["accuracy"]["P3"]["Overall"]["mean"].get<double>() == 100.0);
}

TEST_CASE("error analysis CSV rows") {
  const auto doc = report_to_json(build_report(snli_error_ledger()));
  const auto csv = report_to_csv(doc);
  const auto rows = lines(csv.at("error_analysis.csv"));
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == "gold,predicted,p1p2_mean,p1p2_std,p3_mean,p3_std");
  CHECK(rows[1].rfind("Entailment,Contradiction,4.8,", 0) == 0);
  CHECK(rows[6].rfind("Neutral,Contradiction,33.6,", 0) == 0);
  CAPTURE(rows[1]);
  CHECK(rows[1].find(",1.1,0.0,0.0") != std::string::npos);  // sample std of {4,4,4,6,6}

  for (const auto* name :
       {"factuality.csv", "by_class.csv", "error_analysis.csv", "accuracy.csv", "status.csv"}) {
    CHECK(csv.count(name) == 1);
  }
}

TEST_CASE("population estimator changes only the spread") {
  ReportOptions options;
  options.estimator = StdEstimator::Population;
  const auto doc = report_to_json(build_report(snli_error_ledger(), options));
  const auto rows = lines(report_to_csv(doc).at("error_analysis.csv"));
  CHECK(rows[1].rfind("Entailment,Contradiction,4.8,0.98,", 0) == 0);
  CHECK(doc["std_estimator"] == "population");
}

TEST_CASE("markdown, CSV and JSON carry the same values") {
  const auto doc = report_to_json(build_report(snli_error_ledger()));
  const auto md = report_to_markdown(doc);
  const auto csv = report_to_csv(doc);
  const auto mean = doc["accuracy"]["P1+P2"]["Neutral"]["mean"].dump();
  CHECK(md.find(mean) != std::string::npos);
  CHECK(csv.at("accuracy.csv").find(mean) != std::string::npos);
  CHECK(md.find("| Entailment | Contradiction | 4.8 |") != std::string::npos);
}

TEST_CASE("write_report emits the requested formats") {
  unit::TempDir dir;
  const auto report = build_report(snli_error_ledger());
  const auto all = write_report(report, dir.path(), parse_report_formats("md,csv,json"));
  CHECK(all.size() == 7);
  CHECK(std::filesystem::exists(dir.path() / "report.json"));
  CHECK(std::filesystem::exists(dir.path() / "report.md"));
  CHECK(std::filesystem::exists(dir.path() / "error_analysis.csv"));

  std::ifstream in(dir.path() / "report.json");
  const auto doc = nlohmann::json::parse(in);
  CHECK(doc == report_to_json(report));

  unit::TempDir only_json;
  CHECK(write_report(report, only_json.path(), parse_report_formats("json")).size() == 1);
  CHECK_THROWS(parse_report_formats("md,pdf"));
}

TEST_CASE("an empty ledger still reports status") {
  RunManifest m;
  m.runs = 5;
  m.generation_model.model_name = "gen";
  m.judge_model.model_name = "judge";
  const auto ledger =
      RunLedger::in_memory(m, {unit::instance("a", "p", "h", E), unit::instance("b", "p", "h", C)});
  const auto report = build_report(ledger);
  CHECK(report.factuality.empty());
  CHECK(report.predictions.empty());
  CHECK(report.warnings.size() >= 4);
  const auto doc = report_to_json(report);
  CHECK(doc["records"]["p1"]["pending"] == 10);
  CHECK(doc["records"]["judge_cons_p1"]["expected"] == 8);
  CHECK_NOTHROW(report_to_markdown(doc));
  CHECK_NOTHROW(report_to_csv(doc));
}
