#include "sbgnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sbgnn::train {

Adam::Adam(diff::ParameterStore& params, Options options) : params_(params), options_(options) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& v = params_[i].value;
    m_.push_back(diff::Matrix::Zero(v.rows(), v.cols()));
    v_.push_back(diff::Matrix::Zero(v.rows(), v.cols()));
  }
}

void Adam::step() {
  if (m_.size() != params_.size()) throw std::logic_error("parameter set changed after Adam was created");
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (!params_[i].grad.allFinite())
      throw DivergenceError("non-finite gradient for '" + params_[i].name + "'");

  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    const diff::Matrix g = p.grad + options_.weight_decay * p.value;
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * g;
    v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * g.cwiseAbs2();
    const auto m_hat = m_[i].array() / bc1;
    const auto v_hat = v_[i].array() / bc2;
    p.value.array() -= options_.learning_rate * m_hat / (v_hat.sqrt() + options_.epsilon);
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be non-negative");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  if (layers < 0) throw std::invalid_argument("layer count must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
  if (validation_every < 1) throw std::invalid_argument("validation interval must be at least 1");
}

model::ModelConfig TrainConfig::model_config(Index n_u, Index n_v) const {
  model::ModelConfig mc;
  mc.n_u = n_u;
  mc.n_v = n_v;
  mc.dim = dim;
  mc.layers = layers;
  mc.aggregator = aggregator;
  mc.predictor = predictor;
  mc.dropout = dropout;
  mc.use_set1 = use_set1;
  mc.use_set2 = use_set2;
  return mc;
}

std::vector<int> edge_labels(const SignedBipartiteGraph& g, std::span<const std::size_t> edges) {
  std::vector<int> labels;
  labels.reserve(edges.size());
  for (std::size_t i : edges) labels.push_back(g.edge(i).sign == Sign::Positive ? 1 : 0);
  return labels;
}

metrics::MetricsReport evaluate(const model::SbgnnModel& model, const model::NeighborhoodIndex& index,
                                const SignedBipartiteGraph& g, std::span<const std::size_t> edges,
                                double threshold) {
  if (edges.empty()) throw metrics::MetricError("evaluate: empty edge set");
  const auto scores = model.score_edges(index, g, edges);
  return metrics::evaluate_scores(scores, edge_labels(g, edges), threshold);
}

std::uint64_t run_seed(std::uint64_t base, int run) {
  // splitmix64 finalizer over (base, run).
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(run + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TrainResult train(const SignedBipartiteGraph& g, const EdgeSplit& split, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (split.train.empty()) throw std::invalid_argument("training set is empty");

  TrainResult result{model::SbgnnModel(config.model_config(g.n_u(), g.n_v()), config.seed),
                     model::build_neighborhoods(g, split), {}, -1, std::nullopt};
  auto& model = result.model;
  auto& params = model.params();

  const auto val_labels = edge_labels(g, split.validation);
  const bool val_defined =
      std::count(val_labels.begin(), val_labels.end(), 1) > 0 &&
      std::count(val_labels.begin(), val_labels.end(), 0) > 0;

  Adam optimizer(params, {config.learning_rate, config.weight_decay});
  diff::Rng dropout_rng(run_seed(config.seed, -1));
  std::vector<diff::Matrix> best;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    {
      diff::Tape tape;
      const auto z = model.forward(tape, result.index, true, dropout_rng);
      const auto loss = model::link_sign_loss(tape, model, z, g, split.train, true, dropout_rng);
      entry.loss = loss.scalar();
      if (!std::isfinite(entry.loss))
        throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch));
      params.zero_grad();
      tape.backward(loss);
    }
    optimizer.step();

    if (val_defined && (epoch + 1) % config.validation_every == 0) {
      const auto scores = model.score_edges(result.index, g, split.validation);
      entry.val_auc = metrics::auc(scores, val_labels);
      if (!result.best_val_auc || *entry.val_auc > *result.best_val_auc) {
        result.best_val_auc = entry.val_auc;
        result.best_epoch = epoch;
        best = params.snapshot();
      }
    }
    if (on_epoch) on_epoch(entry);
    result.log.push_back(entry);
  }
  if (!best.empty()) params.restore(best);
  return result;
}

}  // namespace sbgnn::train
