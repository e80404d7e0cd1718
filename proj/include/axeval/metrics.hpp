#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "axeval/dataset.hpp"
#include "axeval/labels.hpp"
#include "axeval/ledger.hpp"

namespace axeval {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Thresholds {
  int helpfulness = 6;
  int consistency = 8;

  /// Throws std::invalid_argument unless both lie in 1..10.
  void validate() const;
};

/// 1 iff rating >= threshold. Ratings outside 1..10 throw std::out_of_range.
int binarize_helpfulness(int rating, int threshold = 6);
int binarize_consistency(int rating, int threshold = 8);

struct HelpfulnessAnnotation {
  std::string instance_id;
  AxiomSource source = AxiomSource::P1;
  int rating = 1;
};

struct ConsistencyAnnotation {
  std::string instance_id;
  AxiomSource source = AxiomSource::P1;
  int j = 2;  // compared run, 2..R
  int rating = 1;
};

/// Mean binarized similarity over runs 2..runs for one instance and source.
/// Throws MetricsError when a run index is missing, duplicated or out of
/// range, or when the annotations mix instances or sources.
double consistency_score(std::span<const ConsistencyAnnotation> annotations, int runs,
                         int threshold = 8);

struct FactualitySummary {
  std::size_t n = 0;
  std::size_t correct = 0;  // h = 1
  double cr = 0;
  double wr = 0;
  double ncr = 0;
};

double net_correct_rate(double cr, double wr);
double net_consistently_correct_rate(double c_correct, double cr, double c_wrong, double wr);

/// Throws MetricsError on an empty set.
FactualitySummary factuality_summary(std::span<const int> h);

/// One instance with both a binarized helpfulness and a consistency score.
struct ScoredInstance {
  int h = 0;
  double cons = 0;
};

struct ConsistencySummary {
  std::size_t n_correct = 0;
  std::size_t n_wrong = 0;
  double c_correct = 0;
  double c_wrong = 0;
  double nccr = 0;
  bool correct_empty = false;  // no h = 1 instance; c_correct set to 0
  bool wrong_empty = false;    // no h = 0 instance; c_wrong set to 0
};

/// C_correct and C_wrong over the scored instances; NCCR weights them with
/// the CR and WR of `factuality`. Throws MetricsError on empty input.
ConsistencySummary consistency_summary(std::span<const ScoredInstance> scored,
                                       const FactualitySummary& factuality);

struct SourceEvaluation {
  FactualitySummary factuality;
  std::optional<ConsistencySummary> consistency;
  std::size_t consistency_incomplete = 0;  // rated instances lacking a full j set
};

/// Factuality over every helpfulness annotation and consistency over the
/// instances that also have all R-1 comparisons. Consistency is absent when
/// runs < 2 or no instance is complete. Throws MetricsError when `help` is
/// empty.
SourceEvaluation evaluate_source(std::span<const HelpfulnessAnnotation> help,
                                 std::span<const ConsistencyAnnotation> cons,
                                 const Thresholds& thresholds, int runs);

/// evaluate_source within each gold-label stratum. Strata without any
/// helpfulness annotation map to nullopt. Annotations whose instance has no
/// entry in `gold` throw MetricsError.
std::map<InferenceLabel, std::optional<SourceEvaluation>> per_class_breakdown(
    std::span<const HelpfulnessAnnotation> help, std::span<const ConsistencyAnnotation> cons,
    const std::map<std::string, InferenceLabel, std::less<>>& gold,
    const Thresholds& thresholds, int runs);

enum class StdEstimator { Sample, Population };
std::string_view to_string(StdEstimator estimator);
StdEstimator parse_std_estimator(std::string_view name);

/// A quantity observed once per run, summarized across runs. With a single
/// run the standard deviation is 0 under either estimator.
struct RunStatistic {
  std::vector<double> per_run;
  double mean = 0;
  double std = 0;

  static RunStatistic of(std::vector<double> values, StdEstimator estimator);
};

/// Gold-by-predicted tallies for one run (or averaged over runs). Cells may
/// be fractional when they hold means.
struct ErrorTally {
  ClassCounts counts;
  std::array<std::array<double, 3>, 3> cells{};  // [gold][predicted]
  std::array<double, 3> excluded{};              // per gold class

  double correct(InferenceLabel gold) const;
  double errors_from(InferenceLabel gold) const;
};

struct ErrorCell {
  InferenceLabel gold;
  InferenceLabel predicted;
  RunStatistic count;
};

/// The six off-diagonal cells in the order E->C, E->N, C->E, C->N, N->E, N->C.
inline constexpr std::array<std::pair<InferenceLabel, InferenceLabel>, 6> kErrorCells = {{
    {InferenceLabel::Entailment, InferenceLabel::Contradiction},
    {InferenceLabel::Entailment, InferenceLabel::Neutral},
    {InferenceLabel::Contradiction, InferenceLabel::Entailment},
    {InferenceLabel::Contradiction, InferenceLabel::Neutral},
    {InferenceLabel::Neutral, InferenceLabel::Entailment},
    {InferenceLabel::Neutral, InferenceLabel::Contradiction},
}};

struct ErrorMatrix {
  ClassCounts counts;
  std::vector<ErrorTally> runs;
  std::vector<ErrorCell> cells;                  // kErrorCells order
  std::map<InferenceLabel, RunStatistic> excluded;
};

/// predictions[k][i] is run k's label for instance i, nullopt when the
/// record was excluded. Throws MetricsError when the shapes disagree or a
/// run has no prediction at all.
ErrorMatrix error_matrix(std::span<const InferenceLabel> gold,
                         const std::vector<std::vector<std::optional<InferenceLabel>>>& predictions,
                         StdEstimator estimator = StdEstimator::Sample);

/// Accuracies in percent for one tally: per class
/// 100*(count - excluded - errors)/(count - excluded), and overall over all
/// classes. Throws MetricsError for a class with no scored predictions.
struct AccuracyRow {
  std::array<double, 3> per_class{};
  double overall = 0;
};
AccuracyRow accuracy_of(const ErrorTally& tally);

struct AccuracyTable {
  std::map<InferenceLabel, RunStatistic> per_class;
  RunStatistic overall;
};

/// accuracy_of per run, then mean and std across runs.
AccuracyTable class_accuracy(const ErrorMatrix& matrix,
                             StdEstimator estimator = StdEstimator::Sample);

}  // namespace axeval
