#include "axeval/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "axeval/text.hpp"

namespace axeval {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kPipelines[] = {kPipelineWithAxioms, kPipelineDirect};

Phase prediction_phase(std::string_view pipeline) {
  return pipeline == kPipelineWithAxioms ? Phase::P2 : Phase::P3;
}

void add_factuality(MetricsReport& report, const RunLedger& ledger,
                    const std::vector<LedgerRecord>& records, AxiomSource source) {
  const std::string name(to_string(source));
  const auto& help_status = report.status.phases.at(help_phase(source));
  if (help_status.pending() > 0) {
    report.warnings.push_back(name + " factuality and consistency omitted: " +
                              std::to_string(help_status.pending()) +
                              " helpfulness ratings pending");
    return;
  }
  std::vector<HelpfulnessAnnotation> help;
  std::vector<ConsistencyAnnotation> cons;
  for (const auto& r : records) {
    if (!r.ok() || !r.rating) continue;
    if (r.phase == help_phase(source)) {
      help.push_back({r.instance_id, source, r.rating->rating});
    } else if (r.phase == cons_phase(source)) {
      cons.push_back({r.instance_id, source, r.run_index, r.rating->rating});
    }
  }
  if (help.empty()) {
    report.warnings.push_back(name + " factuality and consistency omitted: no usable "
                              "helpfulness ratings");
    return;
  }

  int runs = report.runs;
  const auto& cons_status = report.status.phases.at(cons_phase(source));
  if (runs < 2) {
    report.warnings.push_back(name + " consistency not applicable with a single run");
  } else if (cons_status.pending() > 0) {
    report.warnings.push_back(name + " consistency omitted: " +
                              std::to_string(cons_status.pending()) +
                              " similarity ratings pending");
    runs = 1;
  }

  std::map<std::string, InferenceLabel, std::less<>> gold;
  for (const auto& instance : ledger.instances()) gold.emplace(instance.id, instance.gold_label);

  SourceReport out;
  out.overall = evaluate_source(help, cons, report.options.thresholds, runs);
  out.by_class = per_class_breakdown(help, cons, gold, report.options.thresholds, runs);
  if (runs >= 2 && !out.overall.consistency) {
    report.warnings.push_back(name + " consistency omitted: no instance has all " +
                              std::to_string(report.runs - 1) + " similarity ratings");
  }
  report.factuality.emplace(source, std::move(out));
}

void add_predictions(MetricsReport& report, const RunLedger& ledger, const char* pipeline) {
  const Phase phase = prediction_phase(pipeline);
  const auto& status = report.status.phases.at(phase);
  if (status.pending() > 0) {
    report.warnings.push_back(std::string(pipeline) + " error analysis and accuracy omitted: " +
                              std::to_string(status.pending()) + " predictions pending");
    return;
  }
  const auto& instances = ledger.instances();
  std::vector<InferenceLabel> gold;
  for (const auto& instance : instances) gold.push_back(instance.gold_label);
  std::vector<std::vector<std::optional<InferenceLabel>>> predictions(
      static_cast<std::size_t>(report.runs));
  for (int run = 1; run <= report.runs; ++run) {
    auto& column = predictions[static_cast<std::size_t>(run - 1)];
    for (const auto& instance : instances) {
      auto record = ledger.find(instance.id, phase, run);
      if (record && record->ok() && record->label) {
        column.push_back(record->label->label);
      } else {
        column.push_back(std::nullopt);
      }
    }
  }
  PredictionReport out;
  try {
    out.errors = error_matrix(gold, predictions, report.options.estimator);
  } catch (const MetricsError& e) {
    report.warnings.push_back(std::string(pipeline) + " error analysis omitted: " + e.what());
    return;
  }
  try {
    out.accuracy = class_accuracy(out.errors, report.options.estimator);
  } catch (const MetricsError& e) {
    report.warnings.push_back(std::string(pipeline) + " accuracy omitted: " + e.what());
  }
  report.predictions.emplace(pipeline, std::move(out));
}

}  // namespace

MetricsReport build_report(const RunLedger& ledger, const ReportOptions& options) {
  options.thresholds.validate();
  MetricsReport report;
  report.run_id = ledger.manifest().run_id;
  report.manifest_digest = ledger.manifest().digest();
  report.options = options;
  report.runs = ledger.manifest().runs;
  report.counts = class_distribution(ledger.instances());
  report.status = compute_status(ledger);

  const auto records = ledger.snapshot();
  for (const auto& r : records) {
    if (!r.ok()) ++report.exclusions[r.reason];
  }
  if (ledger.damaged_lines() > 0) {
    report.warnings.push_back(std::to_string(ledger.damaged_lines()) +
                              " unreadable ledger lines ignored");
  }
  for (AxiomSource source : {AxiomSource::P1, AxiomSource::P3}) {
    add_factuality(report, ledger, records, source);
  }
  for (const char* pipeline : kPipelines) add_predictions(report, ledger, pipeline);
  return report;
}

// --- JSON ----------------------------------------------------------------------

namespace {

double round_to(double value, double scale) {
  const double rounded = std::round(value * scale) / scale;
  return rounded == 0 ? 0.0 : rounded;  // no "-0.0"
}
double r4(double value) { return round_to(value, 1e4); }
double r2(double value) { return round_to(value, 1e2); }

json summary_json(const SourceEvaluation& eval) {
  const auto& f = eval.factuality;
  json doc = {{"n", f.n},
              {"CR", r4(f.cr)},
              {"WR", r4(f.wr)},
              {"NCR", r4(f.ncr)},
              {"consistency_incomplete", eval.consistency_incomplete}};
  if (eval.consistency) {
    const auto& c = *eval.consistency;
    doc["C_correct"] = r4(c.c_correct);
    doc["C_wrong"] = r4(c.c_wrong);
    doc["NCCR"] = r4(c.nccr);
    doc["consistency_n"] = c.n_correct + c.n_wrong;
    json empty = json::array();
    if (c.correct_empty) empty.push_back("correct");
    if (c.wrong_empty) empty.push_back("wrong");
    doc["empty_strata"] = std::move(empty);
  } else {
    doc["C_correct"] = nullptr;
    doc["C_wrong"] = nullptr;
    doc["NCCR"] = nullptr;
    doc["consistency_n"] = 0;
    doc["empty_strata"] = json::array();
  }
  return doc;
}

json statistic_json(const RunStatistic& s) {
  json per_run = json::array();
  for (double v : s.per_run) per_run.push_back(r2(v));
  return {{"mean", r2(s.mean)}, {"std", r2(s.std)}, {"per_run", std::move(per_run)}};
}

}  // namespace

json report_to_json(const MetricsReport& report) {
  json doc;
  doc["schema_version"] = MetricsReport::kSchemaVersion;
  doc["run_id"] = report.run_id;
  doc["manifest_digest"] = report.manifest_digest;
  doc["thresholds"] = {{"helpfulness", report.options.thresholds.helpfulness},
                       {"consistency", report.options.thresholds.consistency}};
  doc["std_estimator"] = to_string(report.options.estimator);
  doc["runs"] = report.runs;
  doc["class_counts"] = {{"Entailment", report.counts.entailment},
                         {"Contradiction", report.counts.contradiction},
                         {"Neutral", report.counts.neutral},
                         {"total", report.counts.total}};

  json status = json::object();
  for (const auto& [phase, s] : report.status.phases) {
    status[std::string(to_string(phase))] = {{"expected", s.expected},
                                             {"completed", s.completed},
                                             {"excluded", s.excluded},
                                             {"pending", s.pending()}};
  }
  doc["records"] = std::move(status);
  doc["exclusions"] = report.exclusions;
  doc["warnings"] = report.warnings;

  json factuality = json::object();
  for (AxiomSource source : {AxiomSource::P1, AxiomSource::P3}) {
    const std::string key(to_string(source));
    auto it = report.factuality.find(source);
    if (it == report.factuality.end()) {
      factuality[key] = nullptr;
      continue;
    }
    json by_class = json::object();
    for (const auto& [label, eval] : it->second.by_class) {
      by_class[std::string(to_string(label))] = eval ? summary_json(*eval) : json();
    }
    factuality[key] = {{"overall", summary_json(it->second.overall)},
                       {"by_class", std::move(by_class)}};
  }
  doc["factuality"] = std::move(factuality);

  json errors = json::object();
  json accuracy = json::object();
  for (const char* pipeline : kPipelines) {
    auto it = report.predictions.find(pipeline);
    if (it == report.predictions.end()) {
      errors[pipeline] = nullptr;
      accuracy[pipeline] = nullptr;
      continue;
    }
    json cells = json::array();
    for (const auto& cell : it->second.errors.cells) {
      json c = statistic_json(cell.count);
      c["gold"] = to_string(cell.gold);
      c["predicted"] = to_string(cell.predicted);
      cells.push_back(std::move(c));
    }
    json excluded = json::object();
    for (const auto& [label, s] : it->second.errors.excluded) {
      excluded[std::string(to_string(label))] = statistic_json(s);
    }
    errors[pipeline] = {{"cells", std::move(cells)}, {"excluded", std::move(excluded)}};

    if (!it->second.accuracy) {
      accuracy[pipeline] = nullptr;
      continue;
    }
    json acc = json::object();
    for (const auto& [label, s] : it->second.accuracy->per_class) {
      acc[std::string(to_string(label))] = statistic_json(s);
    }
    acc["Overall"] = statistic_json(it->second.accuracy->overall);
    accuracy[pipeline] = std::move(acc);
  }
  doc["error_analysis"] = std::move(errors);
  doc["accuracy"] = std::move(accuracy);
  return doc;
}

// --- Markdown and CSV ------------------------------------------------------------

namespace {

constexpr const char* kSummaryMetrics[] = {"CR", "WR", "NCR", "C_correct", "C_wrong", "NCCR"};
constexpr const char* kClassNames[] = {"Entailment", "Contradiction", "Neutral"};
constexpr const char* kSources[] = {"P1", "P3"};

// Numbers print exactly as in the JSON document.
std::string cell(const json& value, const char* missing) {
  if (value.is_null()) return missing;
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

const json& at_path(const json& doc, std::initializer_list<std::string_view> path) {
  static const json null_value;
  const json* node = &doc;
  for (auto key : path) {
    if (!node->is_object()) return null_value;
    auto it = node->find(key);
    if (it == node->end()) return null_value;
    node = &*it;
  }
  return *node;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void md_row(std::ostringstream& out, const std::vector<std::string>& cells) {
  out << '|';
  for (const auto& c : cells) out << ' ' << c << " |";
  out << '\n';
}

void md_header(std::ostringstream& out, const std::vector<std::string>& cells) {
  md_row(out, cells);
  out << '|';
  for (std::size_t i = 0; i < cells.size(); ++i) out << " --- |";
  out << '\n';
}

const json& error_cell(const json& doc, const char* pipeline, const std::string& gold,
                       const std::string& predicted) {
  static const json null_value;
  const json& cells = at_path(doc, {"error_analysis", pipeline, "cells"});
  if (!cells.is_array()) return null_value;
  for (const auto& c : cells) {
    if (c.at("gold") == gold && c.at("predicted") == predicted) return c;
  }
  return null_value;
}

}  // namespace

std::string report_to_markdown(const json& doc) {
  constexpr const char* na = "n/a";
  std::ostringstream out;
  out << "# Metrics report\n\n";
  out << "- run: " << doc.at("run_id").get<std::string>() << '\n';
  out << "- manifest digest: " << doc.at("manifest_digest").get<std::string>() << '\n';
  out << "- thresholds: helpfulness >= " << doc["thresholds"]["helpfulness"].dump()
      << ", consistency >= " << doc["thresholds"]["consistency"].dump() << '\n';
  out << "- runs: " << doc.at("runs").dump() << " (" << doc.at("std_estimator").get<std::string>()
      << " std)\n";
  const auto& counts = doc.at("class_counts");
  out << "- instances: " << counts["total"].dump() << " (Entailment " << counts["Entailment"].dump()
      << ", Contradiction " << counts["Contradiction"].dump() << ", Neutral "
      << counts["Neutral"].dump() << ")\n\n";

  if (!doc.at("warnings").empty()) {
    out << "## Warnings\n\n";
    for (const auto& w : doc["warnings"]) out << "- " << w.get<std::string>() << '\n';
    out << '\n';
  }

  out << "## Factuality and consistency\n\n";
  md_header(out, {"Metric", "P1", "P3"});
  for (const char* metric : kSummaryMetrics) {
    md_row(out, {metric, cell(at_path(doc, {"factuality", "P1", "overall", metric}), na),
                 cell(at_path(doc, {"factuality", "P3", "overall", metric}), na)});
  }
  out << '\n';

  out << "## By inference class\n\n";
  {
    std::vector<std::string> header = {"Metric"};
    for (const char* source : kSources) {
      for (const char* label : kClassNames) header.push_back(std::string(source) + " " + label);
    }
    md_header(out, header);
    for (const char* metric : kSummaryMetrics) {
      std::vector<std::string> row = {metric};
      for (const char* source : kSources) {
        for (const char* label : kClassNames) {
          row.push_back(cell(at_path(doc, {"factuality", source, "by_class", label, metric}), na));
        }
      }
      md_row(out, row);
    }
  }
  out << '\n';

  out << "## Prediction errors (mean and std over runs)\n\n";
  md_header(out, {"Gold", "Predicted", "P1+P2 mean", "P1+P2 std", "P3 mean", "P3 std"});
  for (const auto& [g, p] : kErrorCells) {
    const std::string gold(to_string(g));
    const std::string predicted(to_string(p));
    std::vector<std::string> row = {gold, predicted};
    for (const char* pipeline : kPipelines) {
      const json& c = error_cell(doc, pipeline, gold, predicted);
      row.push_back(cell(c.is_null() ? c : c["mean"], na));
      row.push_back(cell(c.is_null() ? c : c["std"], na));
    }
    md_row(out, row);
  }
  out << '\n';

  out << "## Accuracy (%)\n\n";
  md_header(out, {"Class", "P1+P2 mean", "P1+P2 std", "P3 mean", "P3 std"});
  for (const char* label : {"Entailment", "Contradiction", "Neutral", "Overall"}) {
    std::vector<std::string> row = {label};
    for (const char* pipeline : kPipelines) {
      row.push_back(cell(at_path(doc, {"accuracy", pipeline, label, "mean"}), na));
      row.push_back(cell(at_path(doc, {"accuracy", pipeline, label, "std"}), na));
    }
    md_row(out, row);
  }
  out << '\n';

  out << "## Records\n\n";
  md_header(out, {"Phase", "Expected", "Completed", "Excluded", "Pending"});
  for (const auto& [phase, s] : doc.at("records").items()) {
    md_row(out, {phase, s["expected"].dump(), s["completed"].dump(), s["excluded"].dump(),
                 s["pending"].dump()});
  }
  out << '\n';
  if (!doc.at("exclusions").empty()) {
    out << "Exclusions by reason:\n\n";
    for (const auto& [reason, n] : doc["exclusions"].items()) {
      out << "- " << reason << ": " << n.dump() << '\n';
    }
    out << '\n';
  }
  return out.str();
}

std::map<std::string, std::string> report_to_csv(const json& doc) {
  std::map<std::string, std::string> files;
  const char* columns[] = {"n", "CR", "WR", "NCR", "C_correct", "C_wrong", "NCCR"};

  {
    std::ostringstream out;
    out << "source,n,CR,WR,NCR,C_correct,C_wrong,NCCR\n";
    for (const char* source : kSources) {
      const json& s = at_path(doc, {"factuality", source, "overall"});
      if (s.is_null()) continue;
      out << source;
      for (const char* col : columns) out << ',' << cell(s[col], "");
      out << '\n';
    }
    files["factuality.csv"] = out.str();
  }
  {
    std::ostringstream out;
    out << "source,class,n,CR,WR,NCR,C_correct,C_wrong,NCCR\n";
    for (const char* source : kSources) {
      for (const char* label : kClassNames) {
        const json& s = at_path(doc, {"factuality", source, "by_class", label});
        if (s.is_null()) continue;
        out << source << ',' << label;
        for (const char* col : columns) out << ',' << cell(s[col], "");
        out << '\n';
      }
    }
    files["by_class.csv"] = out.str();
  }
  {
    std::ostringstream out;
    out << "gold,predicted,p1p2_mean,p1p2_std,p3_mean,p3_std\n";
    for (const auto& [g, p] : kErrorCells) {
      const std::string gold(to_string(g));
      const std::string predicted(to_string(p));
      out << gold << ',' << predicted;
      for (const char* pipeline : kPipelines) {
        const json& c = error_cell(doc, pipeline, gold, predicted);
        out << ',' << cell(c.is_null() ? c : c["mean"], "") << ','
            << cell(c.is_null() ? c : c["std"], "");
      }
      out << '\n';
    }
    files["error_analysis.csv"] = out.str();
  }
  {
    std::ostringstream out;
    out << "class,p1p2_mean,p1p2_std,p3_mean,p3_std\n";
    for (const char* label : {"Entailment", "Contradiction", "Neutral", "Overall"}) {
      out << label;
      for (const char* pipeline : kPipelines) {
        out << ',' << cell(at_path(doc, {"accuracy", pipeline, label, "mean"}), "") << ','
            << cell(at_path(doc, {"accuracy", pipeline, label, "std"}), "");
      }
      out << '\n';
    }
    files["accuracy.csv"] = out.str();
  }
  {
    std::ostringstream out;
    out << "phase,expected,completed,excluded,pending\n";
    for (const auto& [phase, s] : doc.at("records").items()) {
      out << phase << ',' << s["expected"].dump() << ',' << s["completed"].dump() << ','
          << s["excluded"].dump() << ',' << s["pending"].dump() << '\n';
    }
    for (const auto& [reason, n] : doc.at("exclusions").items()) {
      out << "# excluded," << csv_escape(reason) << ',' << n.dump() << '\n';
    }
    files["status.csv"] = out.str();
  }
  return files;
}

std::set<ReportFormat> parse_report_formats(std::string_view list) {
  std::set<ReportFormat> formats;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto end = std::min(list.find(',', start), list.size());
    const auto item = text::to_lower(text::trim(list.substr(start, end - start)));
    if (item == "md" || item == "markdown") {
      formats.insert(ReportFormat::Markdown);
    } else if (item == "csv") {
      formats.insert(ReportFormat::Csv);
    } else if (item == "json") {
      formats.insert(ReportFormat::Json);
    } else if (!item.empty()) {
      throw std::invalid_argument("unknown report format '" + item + "' (expected md, csv, json)");
    }
    start = end + 1;
  }
  if (formats.empty()) throw std::invalid_argument("at least one report format is required");
  return formats;
}

namespace {

fs::path write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return path;
}

}  // namespace

std::vector<fs::path> write_report(const MetricsReport& report, const fs::path& dir,
                                   const std::set<ReportFormat>& formats) {
  fs::create_directories(dir);
  const json doc = report_to_json(report);
  std::vector<fs::path> written;
  if (formats.count(ReportFormat::Json)) {
    written.push_back(write_file(dir / "report.json", doc.dump(2) + "\n"));
  }
  if (formats.count(ReportFormat::Markdown)) {
    written.push_back(write_file(dir / "report.md", report_to_markdown(doc)));
  }
  if (formats.count(ReportFormat::Csv)) {
    for (const auto& [name, content] : report_to_csv(doc)) {
      written.push_back(write_file(dir / name, content));
    }
  }
  return written;
}

}  // namespace axeval
