#pragma once

// Straight-line recomputation of every metric from the raw synthetic data,
// written without the library's metric code. Used as the reference in the
// oracle-equivalence tests.

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "../support/synthetic.hpp"

namespace axeval::oracle {

using testing::kRuns;
using testing::SyntheticItem;
using testing::SyntheticLedger;

struct NaiveSummary {
  int n = 0;
  double cr = 0, wr = 0, ncr = 0;
  bool has_consistency = false;
  double c_correct = 0, c_wrong = 0, nccr = 0;
  int incomplete = 0;
};

// `gold_filter` < 0 means all classes.
inline std::optional<NaiveSummary> naive_summary(const SyntheticLedger& data, int source,
                                                 int help_threshold, int cons_threshold,
                                                 int gold_filter) {
  NaiveSummary s;
  int correct = 0, wrong = 0;
  for (const SyntheticItem& item : data.items) {
    if (gold_filter >= 0 && static_cast<int>(item.gold) != gold_filter) continue;
    if (!item.help[source]) continue;
    if (*item.help[source] >= help_threshold) {
      correct++;
    } else {
      wrong++;
    }
  }
  s.n = correct + wrong;
  if (s.n == 0) return std::nullopt;
  s.cr = double(correct) / double(s.n);
  s.wr = double(wrong) / double(s.n);
  s.ncr = s.cr - s.wr;

  double sum_correct = 0, sum_wrong = 0;
  int n_correct = 0, n_wrong = 0;
  for (const SyntheticItem& item : data.items) {
    if (gold_filter >= 0 && static_cast<int>(item.gold) != gold_filter) continue;
    if (!item.help[source]) continue;
    bool complete = true;
    int consistent = 0;
    for (int j = 2; j <= kRuns; j++) {
      if (!item.cons[source][j]) {
        complete = false;
      } else if (*item.cons[source][j] >= cons_threshold) {
        consistent++;
      }
    }
    if (!complete) {
      s.incomplete++;
      continue;
    }
    const double score = double(consistent) / double(kRuns - 1);
    if (*item.help[source] >= help_threshold) {
      sum_correct += score;
      n_correct++;
    } else {
      sum_wrong += score;
      n_wrong++;
    }
  }
  if (n_correct + n_wrong > 0) {
    s.has_consistency = true;
    s.c_correct = n_correct ? sum_correct / double(n_correct) : 0.0;
    s.c_wrong = n_wrong ? sum_wrong / double(n_wrong) : 0.0;
    s.nccr = s.c_correct * s.cr - s.c_wrong * s.wr;
  }
  return s;
}

struct NaiveStat {
  std::vector<double> per_run;
  double mean = 0, std = 0;
};

inline NaiveStat naive_stat(const std::vector<double>& xs) {
  NaiveStat s;
  s.per_run = xs;
  double total = 0;
  for (double x : xs) total += x;
  s.mean = total / double(xs.size());
  double sq = 0;
  for (double x : xs) sq += (x - s.mean) * (x - s.mean);
  s.std = xs.size() > 1 ? std::sqrt(sq / double(xs.size() - 1)) : 0.0;
  return s;
}

struct NaivePredictions {
  bool has_errors = false;
  // [gold][predicted], off-diagonal cells only are meaningful
  std::array<std::array<NaiveStat, 3>, 3> cells;
  bool has_accuracy = false;
  std::array<NaiveStat, 3> accuracy;
  NaiveStat overall;
};

inline NaivePredictions naive_predictions(const SyntheticLedger& data, int pipeline) {
  NaivePredictions out;
  std::array<int, 3> count{};
  for (const auto& item : data.items) count[static_cast<int>(item.gold)]++;

  // tallies[k][g][p], excluded[k][g]
  std::vector<std::array<std::array<int, 3>, 3>> tallies(kRuns);
  std::vector<std::array<int, 3>> excluded(kRuns);
  for (int k = 0; k < kRuns; k++) {
    tallies[k] = {};
    excluded[k] = {};
    int predicted = 0;
    for (const auto& item : data.items) {
      const int g = static_cast<int>(item.gold);
      const auto& p = item.pred[pipeline][k];
      if (!p) {
        excluded[k][g]++;
      } else {
        tallies[k][g][static_cast<int>(*p)]++;
        predicted++;
      }
    }
    if (predicted == 0) return out;
  }
  out.has_errors = true;
  for (int g = 0; g < 3; g++) {
    for (int p = 0; p < 3; p++) {
      std::vector<double> xs;
      for (int k = 0; k < kRuns; k++) xs.push_back(tallies[k][g][p]);
      out.cells[g][p] = naive_stat(xs);
    }
  }

  std::array<std::vector<double>, 3> acc;
  std::vector<double> overall;
  for (int k = 0; k < kRuns; k++) {
    int scored_all = 0, errors_all = 0;
    for (int g = 0; g < 3; g++) {
      const int scored = count[g] - excluded[k][g];
      if (count[g] == 0 || scored <= 0) return out;
      int errors = 0;
      for (int p = 0; p < 3; p++) {
        if (p != g) errors += tallies[k][g][p];
      }
      acc[g].push_back(100.0 * double(scored - errors) / double(scored));
      scored_all += scored;
      errors_all += errors;
    }
    overall.push_back(100.0 * double(scored_all - errors_all) / double(scored_all));
  }
  out.has_accuracy = true;
  for (int g = 0; g < 3; g++) out.accuracy[g] = naive_stat(acc[g]);
  out.overall = naive_stat(overall);
  return out;
}

}  // namespace axeval::oracle
