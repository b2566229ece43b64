#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "sbgnn/report.hpp"
#include "sbgnn/synthetic.hpp"

namespace sbgnn::report {
namespace {

TEST(Report, Round3) {
  EXPECT_DOUBLE_EQ(round3(0.7984), 0.798);
  EXPECT_DOUBLE_EQ(round3(0.2886), 0.289);
  EXPECT_TRUE(std::isnan(round3(std::nan(""))));
}

TEST(Report, AggregateMeanAndSampleStd) {
  std::vector<metrics::MetricsReport> runs(3);
  runs[0].auc = 0.8;
  runs[1].auc = 0.9;
  runs[2].auc = 1.0;
  const auto j = aggregate_json(runs);
  EXPECT_NEAR(j["mean"]["auc"].get<double>(), 0.9, 1e-12);
  EXPECT_NEAR(j["std"]["auc"].get<double>(), 0.1, 1e-12);
  EXPECT_EQ(aggregate_json(std::span(runs).first(1))["std"]["auc"], 0.0);
}

TEST(Report, SplitRoundTrip) {
  const auto g = synthetic::planted_blocks({}, 1);
  const auto s = split_edges(g, {}, 3);
  const auto back = split_from_json(json::parse(split_json(s).dump()), g);
  EXPECT_EQ(back.train, s.train);
  EXPECT_EQ(back.test, s.test);
  EXPECT_EQ(back.seed, 3u);
  auto bad = split_json(s);
  bad["test"].push_back(s.train[0]);
  EXPECT_THROW(split_from_json(bad, g), FormatError);
  EXPECT_THROW(split_from_json(json{{"train", "x"}}, g), FormatError);
}

TEST(Report, CheckpointRoundTripIsExact) {
  model::ModelConfig c;
  c.n_u = 6;
  c.n_v = 5;
  c.dim = 4;
  c.layers = 2;
  c.aggregator = model::Aggregator::Gat;
  c.predictor = model::Predictor::Mlp;
  c.use_set2 = false;
  model::SbgnnModel m(c, 77);
  m.params().get("embed.u").value(0, 0) = 0.1 + 1e-17;
  const auto j = json::parse(checkpoint_json(m).dump());
  const auto back = model_from_checkpoint(j, 6, 5);
  ASSERT_EQ(back.params().size(), m.params().size());
  for (std::size_t i = 0; i < m.params().size(); ++i) EXPECT_EQ(back.params()[i].value, m.params()[i].value);
  EXPECT_FALSE(back.config().use_set2);
  EXPECT_EQ(back.seed(), 77u);
  EXPECT_THROW(model_from_checkpoint(j, 7, 5), FormatError);
  auto broken = j;
  broken["parameters"].erase("embed.u");
  EXPECT_THROW(model_from_checkpoint(broken, 6, 5), FormatError);
}

TEST(Report, CensusJsonHasRowsAndSummaries) {
  const auto g = synthetic::random_graph(8, 8, 0.6, 0.5, 1);
  const auto j = census_json(balance::count_butterflies(g));
  EXPECT_EQ(j["classes"].size(), 7u);
  for (const auto& [name, row] : j["classes"].items()) {
    for (const char* k : {"count", "fraction", "expectation"}) EXPECT_TRUE(row.contains(k)) << name << k;
  }
  EXPECT_TRUE(j.contains("balanced_fraction"));
  EXPECT_TRUE(j.contains("unbalanced_expectation"));
}

}  // namespace
}  // namespace sbgnn::report
