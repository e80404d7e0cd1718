#include "axeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <variant>

namespace axeval {

void Thresholds::validate() const {
  if (helpfulness < 1 || helpfulness > 10 || consistency < 1 || consistency > 10) {
    throw std::invalid_argument("thresholds must lie in 1..10");
  }
}

namespace {

int binarize(int rating, int threshold, const char* what) {
  if (rating < 1 || rating > 10) {
    throw std::out_of_range(std::string(what) + " rating " + std::to_string(rating) +
                            " outside 1..10");
  }
  return rating >= threshold ? 1 : 0;
}

// Mean c over j = 2..runs, or an error message when the set is incomplete.
std::variant<double, std::string> score_instance(
    std::span<const ConsistencyAnnotation> annotations, int runs, int threshold) {
  if (runs < 2) return std::string("consistency needs at least 2 runs");
  if (annotations.empty()) return std::string("no consistency annotations");
  std::vector<int> c(static_cast<std::size_t>(runs + 1), -1);
  for (const auto& a : annotations) {
    if (a.instance_id != annotations.front().instance_id ||
        a.source != annotations.front().source) {
      return std::string("consistency annotations mix instances or sources");
    }
    if (a.j < 2 || a.j > runs) {
      return "run index " + std::to_string(a.j) + " outside 2.." + std::to_string(runs);
    }
    auto& slot = c[static_cast<std::size_t>(a.j)];
    if (slot != -1) return "duplicate run index " + std::to_string(a.j);
    slot = binarize(a.rating, threshold, "consistency");
  }
  int sum = 0;
  for (int j = 2; j <= runs; ++j) {
    const int v = c[static_cast<std::size_t>(j)];
    if (v == -1) {
      return "instance " + annotations.front().instance_id + " missing run index " +
             std::to_string(j);
    }
    sum += v;
  }
  return static_cast<double>(sum) / (runs - 1);
}

}  // namespace

int binarize_helpfulness(int rating, int threshold) {
  return binarize(rating, threshold, "helpfulness");
}

int binarize_consistency(int rating, int threshold) {
  return binarize(rating, threshold, "consistency");
}

double consistency_score(std::span<const ConsistencyAnnotation> annotations, int runs,
                         int threshold) {
  auto result = score_instance(annotations, runs, threshold);
  if (auto* message = std::get_if<std::string>(&result)) throw MetricsError(*message);
  return std::get<double>(result);
}

double net_correct_rate(double cr, double wr) { return cr - wr; }

double net_consistently_correct_rate(double c_correct, double cr, double c_wrong, double wr) {
  return c_correct * cr - c_wrong * wr;
}

FactualitySummary factuality_summary(std::span<const int> h) {
  if (h.empty()) throw MetricsError("factuality summary over an empty annotation set");
  FactualitySummary s;
  s.n = h.size();
  s.correct = static_cast<std::size_t>(std::count(h.begin(), h.end(), 1));
  s.cr = static_cast<double>(s.correct) / static_cast<double>(s.n);
  s.wr = static_cast<double>(s.n - s.correct) / static_cast<double>(s.n);
  s.ncr = net_correct_rate(s.cr, s.wr);
  return s;
}

ConsistencySummary consistency_summary(std::span<const ScoredInstance> scored,
                                       const FactualitySummary& factuality) {
  if (scored.empty()) throw MetricsError("consistency summary over an empty set");
  ConsistencySummary s;
  double sum_correct = 0;
  double sum_wrong = 0;
  for (const auto& item : scored) {
    if (item.h == 1) {
      sum_correct += item.cons;
      ++s.n_correct;
    } else {
      sum_wrong += item.cons;
      ++s.n_wrong;
    }
  }
  s.correct_empty = s.n_correct == 0;
  s.wrong_empty = s.n_wrong == 0;
  s.c_correct = s.correct_empty ? 0.0 : sum_correct / static_cast<double>(s.n_correct);
  s.c_wrong = s.wrong_empty ? 0.0 : sum_wrong / static_cast<double>(s.n_wrong);
  s.nccr = net_consistently_correct_rate(s.c_correct, factuality.cr, s.c_wrong, factuality.wr);
  return s;
}

SourceEvaluation evaluate_source(std::span<const HelpfulnessAnnotation> help,
                                 std::span<const ConsistencyAnnotation> cons,
                                 const Thresholds& thresholds, int runs) {
  if (help.empty()) throw MetricsError("no helpfulness annotations");
  std::vector<const HelpfulnessAnnotation*> ordered;
  ordered.reserve(help.size());
  for (const auto& a : help) ordered.push_back(&a);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->instance_id < b->instance_id; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i]->instance_id == ordered[i - 1]->instance_id) {
      throw MetricsError("duplicate helpfulness annotation for " + ordered[i]->instance_id);
    }
  }

  std::vector<int> h;
  h.reserve(ordered.size());
  for (const auto* a : ordered) h.push_back(binarize_helpfulness(a->rating, thresholds.helpfulness));

  SourceEvaluation eval;
  eval.factuality = factuality_summary(h);
  if (runs < 2) return eval;

  std::map<std::string, std::vector<ConsistencyAnnotation>, std::less<>> by_instance;
  for (const auto& a : cons) by_instance[a.instance_id].push_back(a);

  std::vector<ScoredInstance> scored;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    auto it = by_instance.find(ordered[i]->instance_id);
    if (it == by_instance.end()) {
      ++eval.consistency_incomplete;
      continue;
    }
    auto result = score_instance(it->second, runs, thresholds.consistency);
    if (const double* score = std::get_if<double>(&result)) {
      scored.push_back({h[i], *score});
    } else {
      ++eval.consistency_incomplete;
    }
  }
  if (!scored.empty()) eval.consistency = consistency_summary(scored, eval.factuality);
  return eval;
}

std::map<InferenceLabel, std::optional<SourceEvaluation>> per_class_breakdown(
    std::span<const HelpfulnessAnnotation> help, std::span<const ConsistencyAnnotation> cons,
    const std::map<std::string, InferenceLabel, std::less<>>& gold,
    const Thresholds& thresholds, int runs) {
  auto label_of = [&](const std::string& id) {
    auto it = gold.find(id);
    if (it == gold.end()) throw MetricsError("annotation for unknown instance " + id);
    return it->second;
  };
  std::array<std::vector<HelpfulnessAnnotation>, 3> help_by;
  std::array<std::vector<ConsistencyAnnotation>, 3> cons_by;
  for (const auto& a : help) help_by[label_index(label_of(a.instance_id))].push_back(a);
  for (const auto& a : cons) cons_by[label_index(label_of(a.instance_id))].push_back(a);

  std::map<InferenceLabel, std::optional<SourceEvaluation>> out;
  for (InferenceLabel label : kAllLabels) {
    const auto i = label_index(label);
    out[label] = help_by[i].empty()
                     ? std::nullopt
                     : std::optional(evaluate_source(help_by[i], cons_by[i], thresholds, runs));
  }
  return out;
}

std::string_view to_string(StdEstimator estimator) {
  return estimator == StdEstimator::Sample ? "sample" : "population";
}

StdEstimator parse_std_estimator(std::string_view name) {
  if (name == "sample") return StdEstimator::Sample;
  if (name == "population") return StdEstimator::Population;
  throw std::invalid_argument("unknown std estimator '" + std::string(name) +
                              "' (expected sample or population)");
}

RunStatistic RunStatistic::of(std::vector<double> values, StdEstimator estimator) {
  RunStatistic s;
  s.per_run = std::move(values);
  const auto n = s.per_run.size();
  if (n == 0) return s;
  double sum = 0;
  for (double v : s.per_run) sum += v;
  s.mean = sum / static_cast<double>(n);
  const std::size_t dof = estimator == StdEstimator::Sample ? n - 1 : n;
  if (n < 2 || dof == 0) return s;
  double squares = 0;
  for (double v : s.per_run) squares += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(squares / static_cast<double>(dof));
  return s;
}

double ErrorTally::errors_from(InferenceLabel gold) const {
  double sum = 0;
  for (InferenceLabel predicted : kAllLabels) {
    if (predicted != gold) sum += cells[label_index(gold)][label_index(predicted)];
  }
  return sum;
}

double ErrorTally::correct(InferenceLabel gold) const {
  return static_cast<double>(counts.count(gold)) - excluded[label_index(gold)] -
         errors_from(gold);
}

ErrorMatrix error_matrix(std::span<const InferenceLabel> gold,
                         const std::vector<std::vector<std::optional<InferenceLabel>>>& predictions,
                         StdEstimator estimator) {
  if (predictions.empty()) throw MetricsError("error matrix needs at least one run");
  ErrorMatrix m;
  for (InferenceLabel g : gold) {
    switch (g) {
      case InferenceLabel::Entailment: ++m.counts.entailment; break;
      case InferenceLabel::Contradiction: ++m.counts.contradiction; break;
      case InferenceLabel::Neutral: ++m.counts.neutral; break;
    }
  }
  m.counts.total = gold.size();

  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const auto& run = predictions[k];
    if (run.size() != gold.size()) {
      throw MetricsError("run " + std::to_string(k + 1) + " has " + std::to_string(run.size()) +
                         " predictions for " + std::to_string(gold.size()) + " instances");
    }
    ErrorTally tally;
    tally.counts = m.counts;
    std::size_t predicted = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const auto g = label_index(gold[i]);
      if (!run[i]) {
        tally.excluded[g] += 1;
        continue;
      }
      tally.cells[g][label_index(*run[i])] += 1;
      ++predicted;
    }
    if (predicted == 0) {
      throw MetricsError("run " + std::to_string(k + 1) + " has no predictions");
    }
    m.runs.push_back(tally);
  }

  for (const auto& [g, p] : kErrorCells) {
    std::vector<double> values;
    for (const auto& tally : m.runs) values.push_back(tally.cells[label_index(g)][label_index(p)]);
    m.cells.push_back({g, p, RunStatistic::of(std::move(values), estimator)});
  }
  for (InferenceLabel g : kAllLabels) {
    std::vector<double> values;
    for (const auto& tally : m.runs) values.push_back(tally.excluded[label_index(g)]);
    m.excluded[g] = RunStatistic::of(std::move(values), estimator);
  }
  return m;
}

AccuracyRow accuracy_of(const ErrorTally& tally) {
  AccuracyRow row;
  double scored_total = 0;
  double errors_total = 0;
  for (InferenceLabel g : kAllLabels) {
    const auto i = label_index(g);
    const double count = static_cast<double>(tally.counts.count(g));
    if (count == 0) {
      throw MetricsError("class " + std::string(to_string(g)) + " has no instances");
    }
    const double scored = count - tally.excluded[i];
    if (scored <= 0) {
      throw MetricsError("class " + std::string(to_string(g)) + " has no scored predictions");
    }
    const double errors = tally.errors_from(g);
    row.per_class[i] = 100.0 * (scored - errors) / scored;
    scored_total += scored;
    errors_total += errors;
  }
  row.overall = 100.0 * (scored_total - errors_total) / scored_total;
  return row;
}

AccuracyTable class_accuracy(const ErrorMatrix& matrix, StdEstimator estimator) {
  std::array<std::vector<double>, 3> per_class;
  std::vector<double> overall;
  for (const auto& tally : matrix.runs) {
    const AccuracyRow row = accuracy_of(tally);
    for (std::size_t i = 0; i < 3; ++i) per_class[i].push_back(row.per_class[i]);
    overall.push_back(row.overall);
  }
  AccuracyTable table;
  for (InferenceLabel g : kAllLabels) {
    table.per_class[g] = RunStatistic::of(std::move(per_class[label_index(g)]), estimator);
  }
  table.overall = RunStatistic::of(std::move(overall), estimator);
  return table;
}

}  // namespace axeval
