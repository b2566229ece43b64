#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

namespace sbgnn::metrics {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * Area under the ROC curve via the rank-sum statistic with average ranks,
 * i.e. the probability that a random positive outscores a random negative,
 * ties counting one half. Labels are 0/1. Throws MetricError when only one
 * class is present.
 */
double auc(std::span<const double> scores, std::span<const int> labels);

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

Confusion confusion(std::span<const int> predictions, std::span<const int> labels);

struct F1Scores {
  double binary = 0.0;  // F1 of the positive class
  double macro = 0.0;   // mean of positive- and negative-class F1
  double micro = 0.0;   // pooled; equals accuracy for binary single-label data
};

/// A class with no predicted and no actual members scores F1 = 0.
F1Scores f1_scores(const Confusion& c);
F1Scores f1_scores(std::span<const int> predictions, std::span<const int> labels);

struct MetricsReport {
  double auc = 0.0;
  double binary_f1 = 0.0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::size_t n_edges_evaluated = 0;
};

/// All four metrics, thresholding scores at `threshold` (score >= threshold
/// predicts positive).
MetricsReport evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                              double threshold = 0.5);

}  // namespace sbgnn::metrics
