#include "sbgnn/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace sbgnn::metrics {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw MetricError("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of 1-based average ranks of the positives.
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += avg_rank;
        ++n_pos;
      } else if (labels[order[k]] != 0) {
        throw MetricError("auc: labels must be 0 or 1");
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw MetricError("auc: both classes must be present");
  const double p = static_cast<double>(n_pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

Confusion confusion(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw MetricError("confusion: predictions and labels differ in length");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == 1;
    const bool truth = labels[i] == 1;
    if (pred && truth) ++c.tp;
    else if (pred) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

F1Scores f1_scores(const Confusion& c) {
  if (c.total() == 0) throw MetricError("f1_scores: no predictions");
  F1Scores s;
  s.binary = f1(c.tp, c.fp, c.fn);
  const double negative = f1(c.tn, c.fn, c.fp);
  s.macro = 0.5 * (s.binary + negative);
  // Pooled over both classes: TP_all = tp + tn, FP_all = FN_all = fp + fn.
  s.micro = f1(c.tp + c.tn, c.fp + c.fn, c.fp + c.fn);
  return s;
}

F1Scores f1_scores(std::span<const int> predictions, std::span<const int> labels) {
  return f1_scores(confusion(predictions, labels));
}

MetricsReport evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                              double threshold) {
  if (scores.empty()) throw MetricError("evaluate: empty edge set");
  std::vector<int> predictions(scores.size());
  std::transform(scores.begin(), scores.end(), predictions.begin(),
                 [threshold](double s) { return s >= threshold ? 1 : 0; });
  const F1Scores f = f1_scores(predictions, labels);
  MetricsReport r;
  r.auc = auc(scores, labels);
  r.binary_f1 = f.binary;
  r.macro_f1 = f.macro;
  r.micro_f1 = f.micro;
  r.n_edges_evaluated = scores.size();
  return r;
}

}  // namespace sbgnn::metrics
