#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sbgnn/diff.hpp"
#include "sbgnn/graph.hpp"
#include "sbgnn/metrics.hpp"
#include "sbgnn/model.hpp"

namespace sbgnn::train {

/// Raised when the loss or a gradient stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adam with L2 weight decay folded into the gradient.
class Adam {
 public:
  struct Options {
    double learning_rate = 0.005;
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  Adam(diff::ParameterStore& params, Options options);

  /// Applies one update from the parameters' current gradients.
  void step();
  std::uint64_t steps() const { return t_; }
  const Options& options() const { return options_; }

 private:
  diff::ParameterStore& params_;
  Options options_;
  std::vector<diff::Matrix> m_;
  std::vector<diff::Matrix> v_;
  std::uint64_t t_ = 0;
};

struct TrainConfig {
  double learning_rate = 0.005;
  double weight_decay = 1e-5;
  int epochs = 2000;
  int dim = 32;
  int layers = 1;
  model::Aggregator aggregator = model::Aggregator::Mean;
  model::Predictor predictor = model::Predictor::Product;
  double dropout = 0.5;
  std::uint64_t seed = 0;
  int validation_every = 1;
  bool use_set1 = true;
  bool use_set2 = true;

  /// Layer default for an aggregator: 1 for mean, 2 for attention.
  static int default_layers(model::Aggregator a) { return a == model::Aggregator::Gat ? 2 : 1; }
  void validate() const;
  model::ModelConfig model_config(Index n_u, Index n_v) const;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  std::optional<double> val_auc;
};

struct TrainResult {
  model::SbgnnModel model;          // parameters of the best validation epoch
  model::NeighborhoodIndex index;   // training-edge neighborhoods used by the model
  std::vector<EpochLog> log;
  int best_epoch = -1;              // -1 when validation AUC was never defined
  std::optional<double> best_val_auc;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/**
 * Full-batch training on split.train. Validation AUC is measured with
 * dropout off every `validation_every` epochs; the returned model holds the
 * parameters with the highest validation AUC (earliest epoch on ties), or
 * the final parameters if validation AUC is undefined (single-class
 * validation set). Throws DivergenceError on a non-finite loss.
 */
TrainResult train(const SignedBipartiteGraph& g, const EdgeSplit& split, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Metrics of `model` on the listed edges, dropout off.
metrics::MetricsReport evaluate(const model::SbgnnModel& model, const model::NeighborhoodIndex& index,
                                const SignedBipartiteGraph& g, std::span<const std::size_t> edges,
                                double threshold = 0.5);

/// Labels (1 positive, 0 negative) of the listed edges.
std::vector<int> edge_labels(const SignedBipartiteGraph& g, std::span<const std::size_t> edges);

/// Seed of repetition `run` for a base seed; distinct runs get distinct
/// splits and initializations.
std::uint64_t run_seed(std::uint64_t base, int run);

}  // namespace sbgnn::train
