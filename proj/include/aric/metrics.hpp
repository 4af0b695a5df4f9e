#pragma once

#include "json.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace aric {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  double accuracy() const;
  bool operator==(const ConfusionCounts&) const = default;
};

/// Counts for the positive class (label 1). Throws ConfigError on length mismatch or empty input.
ConfusionCounts confusion(std::span<const int> preds, std::span<const int> labels);

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Zero denominators yield 0 for the affected quantity.
PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c);

/// Mann-Whitney statistic: P(score_pos > score_neg) + 0.5 P(tie). Requires both classes.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

struct MacroMicroF1 {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
};

/// Macro: unweighted mean of per-class F1. Micro: F1 of the summed counts.
MacroMicroF1 macro_micro_f1(std::span<const ConfusionCounts> per_class);

/// Counts with the roles of the two classes swapped (label 0 as "positive").
ConfusionCounts flipped(const ConfusionCounts& c);

struct MetricsReport {
  double accuracy = 0.0;
  double auc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double macro_f1 = 0.0;  // over {positive, negative}
  double micro_f1 = 0.0;
  ConfusionCounts counts;
};

/// Thresholds scores at 0.5 (ties positive) and fills every field.
MetricsReport evaluate_binary(std::span<const double> scores, std::span<const int> labels);

/// Flat object: accuracy, auc, precision, recall, f1, macro_f1, micro_f1, tp, fp, tn, fn.
nlohmann::json to_json(const MetricsReport& r);

}  // namespace aric
