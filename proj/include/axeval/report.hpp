#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "axeval/ledger.hpp"
#include "axeval/metrics.hpp"
#include "axeval/orchestrator.hpp"

namespace axeval {

struct ReportOptions {
  Thresholds thresholds;
  StdEstimator estimator = StdEstimator::Sample;
};

struct SourceReport {
  SourceEvaluation overall;
  std::map<InferenceLabel, std::optional<SourceEvaluation>> by_class;
};

struct PredictionReport {
  ErrorMatrix errors;
  std::optional<AccuracyTable> accuracy;
};

/// Everything derivable from one ledger snapshot. Table families whose
/// phases are still pending (or have nothing usable) are left out and a
/// warning says why.
struct MetricsReport {
  static constexpr int kSchemaVersion = 1;

  std::string run_id;
  std::string manifest_digest;
  ReportOptions options;
  int runs = 0;
  ClassCounts counts;
  ExperimentStatus status;
  std::map<std::string, std::size_t> exclusions;  // reason -> records
  std::vector<std::string> warnings;

  std::map<AxiomSource, SourceReport> factuality;
  std::map<std::string, PredictionReport> predictions;  // "P1+P2", "P3"
};

inline constexpr const char* kPipelineWithAxioms = "P1+P2";
inline constexpr const char* kPipelineDirect = "P3";

MetricsReport build_report(const RunLedger& ledger, const ReportOptions& options = {});

/// Canonical form. Rates are rounded to 4 decimals; counts, standard
/// deviations and percentages to 2. The Markdown and CSV renderings are
/// produced from this document, so all three carry identical values.
nlohmann::json report_to_json(const MetricsReport& report);
std::string report_to_markdown(const nlohmann::json& doc);

/// File name -> contents: factuality.csv, by_class.csv, error_analysis.csv,
/// accuracy.csv and status.csv.
std::map<std::string, std::string> report_to_csv(const nlohmann::json& doc);

enum class ReportFormat { Markdown, Csv, Json };
std::set<ReportFormat> parse_report_formats(std::string_view list);  // "md,csv,json"

/// Writes report.json / report.md / *.csv into `dir`; returns the paths.
std::vector<std::filesystem::path> write_report(const MetricsReport& report,
                                                const std::filesystem::path& dir,
                                                const std::set<ReportFormat>& formats);

}  // namespace axeval
