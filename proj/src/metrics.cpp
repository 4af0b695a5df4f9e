#include "aric/metrics.hpp"

#include "aric/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aric {

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_of(double precision, double recall) {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double ConfusionCounts::accuracy() const {
  return safe_div(static_cast<double>(tp + tn), static_cast<double>(total()));
}

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) {
    throw ConfigError("confusion: predictions and labels differ in length");
  }
  if (preds.empty()) {
    throw ConfigError("confusion: empty input");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] != 0;
    const bool y = labels[i] != 0;
    if (p && y) ++c.tp;
    else if (p && !y) ++c.fp;
    else if (!p && y) ++c.fn;
    else ++c.tn;
  }
  return c;
}

PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c) {
  PrecisionRecallF1 r;
  r.precision = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  r.recall = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  r.f1 = f1_of(r.precision, r.recall);
  return r;
}

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ConfigError("auc_roc: scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of mid-ranks of the positives; tied blocks share their average rank.
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0) {
        pos_rank_sum += mid_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw ConfigError("auc_roc: needs at least one positive and one negative label");
  }
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

MacroMicroF1 macro_micro_f1(std::span<const ConfusionCounts> per_class) {
  if (per_class.empty()) {
    throw ConfigError("macro_micro_f1: no classes");
  }
  MacroMicroF1 out;
  ConfusionCounts pooled;
  for (const auto& c : per_class) {
    out.macro_f1 += precision_recall_f1(c).f1;
    pooled.tp += c.tp;
    pooled.fp += c.fp;
    pooled.tn += c.tn;
    pooled.fn += c.fn;
  }
  out.macro_f1 /= static_cast<double>(per_class.size());
  out.micro_f1 = precision_recall_f1(pooled).f1;
  return out;
}

ConfusionCounts flipped(const ConfusionCounts& c) { return {c.tn, c.fn, c.tp, c.fp}; }

MetricsReport evaluate_binary(std::span<const double> scores, std::span<const int> labels) {
  std::vector<int> preds(scores.size());
  std::transform(scores.begin(), scores.end(), preds.begin(), [](double s) { return s >= 0.5 ? 1 : 0; });
  MetricsReport r;
  r.counts = confusion(preds, labels);
  r.accuracy = r.counts.accuracy();
  r.auc = auc_roc(scores, labels);
  const auto prf = precision_recall_f1(r.counts);
  r.precision = prf.precision;
  r.recall = prf.recall;
  r.f1 = prf.f1;
  const ConfusionCounts both[] = {r.counts, flipped(r.counts)};
  const auto mm = macro_micro_f1(both);
  r.macro_f1 = mm.macro_f1;
  r.micro_f1 = mm.micro_f1;
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  return {{"accuracy", r.accuracy}, {"auc", r.auc},           {"precision", r.precision},
          {"recall", r.recall},     {"f1", r.f1},             {"macro_f1", r.macro_f1},
          {"micro_f1", r.micro_f1}, {"tp", r.counts.tp},      {"fp", r.counts.fp},
          {"tn", r.counts.tn},      {"fn", r.counts.fn}};
}

}  // namespace aric
