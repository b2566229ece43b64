#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "sbgnn/synthetic.hpp"
#include "sbgnn/train.hpp"

namespace sbgnn::train {
namespace {

using diff::Matrix;

TEST(Adam, ZeroGradientIsFixedPoint) {
  diff::ParameterStore s;
  auto& w = s.add("w", Matrix::Constant(2, 2, 0.7));
  Adam opt(s, {0.1, 0.0});
  for (int i = 0; i < 5; ++i) {
    s.zero_grad();
    opt.step();
  }
  EXPECT_EQ(w.value, Matrix::Constant(2, 2, 0.7));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  diff::ParameterStore s;
  Matrix init(1, 3);
  init << 1.0, -2.0, 0.5;
  auto& w = s.add("w", init);
  w.grad << 3.0, -0.01, 100.0;
  Adam opt(s, {0.01, 0.0});
  opt.step();
  EXPECT_NEAR(w.value(0, 0), 1.0 - 0.01, 1e-8);
  EXPECT_NEAR(w.value(0, 1), -2.0 + 0.01, 1e-6);
  EXPECT_NEAR(w.value(0, 2), 0.5 - 0.01, 1e-8);
}

TEST(Adam, TwoStepsOnSquareMatchHandReference) {
  diff::ParameterStore s;
  auto& w = s.add("theta", Matrix::Constant(1, 1, 1.0));
  Adam opt(s, {0.1, 0.0});
  double theta = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    w.grad(0, 0) = 2.0 * w.value(0, 0);
    opt.step();
    const double g = 2.0 * theta;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    theta -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(w.value(0, 0), theta, 1e-12);
  }
}

TEST(Adam, WeightDecayAddsToGradient) {
  diff::ParameterStore a, b;
  auto& wa = a.add("w", Matrix::Constant(1, 1, 2.0));
  auto& wb = b.add("w", Matrix::Constant(1, 1, 2.0));
  Adam oa(a, {0.05, 0.5}), ob(b, {0.05, 0.0});
  for (int i = 0; i < 3; ++i) {
    wa.grad(0, 0) = 0.3;
    wb.grad(0, 0) = 0.3 + 0.5 * wb.value(0, 0);
    oa.step();
    ob.step();
  }
  EXPECT_NEAR(wa.value(0, 0), wb.value(0, 0), 1e-14);
}

TEST(Adam, RejectsNonFiniteGradient) {
  diff::ParameterStore s;
  auto& w = s.add("w", Matrix::Ones(1, 1));
  w.grad(0, 0) = std::nan("");
  Adam opt(s, {});
  EXPECT_THROW(opt.step(), DivergenceError);
}

TrainConfig quick(int epochs, model::Aggregator agg = model::Aggregator::Mean) {
  TrainConfig c;
  c.epochs = epochs;
  c.dim = 8;
  c.aggregator = agg;
  c.layers = TrainConfig::default_layers(agg);
  c.seed = 3;
  return c;
}

TEST(Train, EpochZeroLossNearLn2) {
  const auto g = synthetic::planted_blocks({}, 1);
  const auto split = split_edges(g, {}, 1);
  const auto r = train(g, split, quick(1));
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_NEAR(r.log[0].loss, std::log(2.0), 0.05);
}

TEST(Train, BitIdenticalLogsForSameSeed) {
  const auto g = synthetic::planted_blocks({}, 2);
  const auto split = split_edges(g, {}, 2);
  const auto a = train(g, split, quick(15, model::Aggregator::Gat));
  const auto b = train(g, split, quick(15, model::Aggregator::Gat));
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].loss, b.log[i].loss);
    EXPECT_EQ(a.log[i].val_auc, b.log[i].val_auc);
  }
  for (std::size_t i = 0; i < a.model.params().size(); ++i)
    EXPECT_EQ(a.model.params()[i].value, b.model.params()[i].value);
}

TEST(Train, BestSnapshotHasMaximalValidationAuc) {
  const auto g = synthetic::planted_blocks({}, 4);
  const auto split = split_edges(g, {}, 4);
  const auto r = train(g, split, quick(40));
  ASSERT_TRUE(r.best_val_auc.has_value());
  for (const auto& e : r.log)
    if (e.val_auc) EXPECT_GE(*r.best_val_auc, *e.val_auc);
  const auto labels = edge_labels(g, split.validation);
  const auto scores = r.model.score_edges(r.index, g, split.validation);
  EXPECT_DOUBLE_EQ(metrics::auc(scores, labels), *r.best_val_auc);
  // Earliest epoch on ties.
  for (const auto& e : r.log)
    if (e.epoch < r.best_epoch && e.val_auc) EXPECT_LT(*e.val_auc, *r.best_val_auc);
}

TEST(Train, ValidationIntervalIsHonored) {
  const auto g = synthetic::planted_blocks({}, 5);
  const auto split = split_edges(g, {}, 5);
  auto c = quick(10);
  c.validation_every = 4;
  const auto r = train(g, split, c);
  for (const auto& e : r.log) EXPECT_EQ(e.val_auc.has_value(), (e.epoch + 1) % 4 == 0);
}

TEST(Train, LearnsPlantedBlocks) {
  for (auto agg : {model::Aggregator::Mean, model::Aggregator::Gat}) {
    const auto g = synthetic::planted_blocks({}, 6);
    const auto split = split_edges(g, {}, 6);
    auto c = quick(150, agg);
    c.dim = 16;
    const auto r = train(g, split, c);
    EXPECT_GE(evaluate(r.model, r.index, g, split.test).auc, 0.85) << model::to_string(agg);
  }
}

TEST(Train, ZeroLayerBaselineTrains) {
  const auto g = synthetic::planted_blocks({}, 7);
  const auto split = split_edges(g, {}, 7);
  auto c = quick(5);
  c.layers = 0;
  const auto r = train(g, split, c);
  EXPECT_EQ(r.log.size(), 5u);
  EXPECT_TRUE(std::isfinite(evaluate(r.model, r.index, g, split.test).auc));
}

TEST(Train, DivergenceIsReported) {
  const auto g = synthetic::planted_blocks({}, 8);
  const auto split = split_edges(g, {}, 8);
  auto c = quick(50);
  c.learning_rate = 1e200;
  EXPECT_THROW(train(g, split, c), std::runtime_error);
}

TEST(Config, Validation) {
  TrainConfig c;
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(TrainConfig::default_layers(model::Aggregator::Gat), 2);
  EXPECT_EQ(TrainConfig::default_layers(model::Aggregator::Mean), 1);
}

TEST(RunSeed, DistinctAndStable) {
  EXPECT_EQ(run_seed(5, 0), run_seed(5, 0));
  EXPECT_NE(run_seed(5, 0), run_seed(5, 1));
  EXPECT_NE(run_seed(5, 0), run_seed(6, 0));
}

}  // namespace
}  // namespace sbgnn::train
