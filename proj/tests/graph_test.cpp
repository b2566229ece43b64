#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "sbgnn/graph.hpp"
#include "sbgnn/synthetic.hpp"
#include "support.hpp"

namespace sbgnn {
namespace {

LoadedGraph parse(const std::string& text, IdMode mode = IdMode::Named) {
  std::istringstream in(text);
  return parse_edge_list(in, mode);
}

TEST(EdgeList, ParsesTwoEdges) {
  const auto g = parse("a x 1\na y -1\n").graph;
  EXPECT_EQ(g.n_u(), 1u);
  EXPECT_EQ(g.n_v(), 2u);
  EXPECT_EQ(g.n_positive(), 1u);
  EXPECT_EQ(g.n_negative(), 1u);
}

TEST(EdgeList, ConflictingDuplicateIsRejected) {
  EXPECT_THROW(parse("a x 1\na x -1\n"), GraphError);
}

TEST(EdgeList, SameSignDuplicateIsCollapsed) {
  const auto loaded = parse("a x 1\na x 1\n");
  EXPECT_EQ(loaded.graph.n_edges(), 1u);
  EXPECT_EQ(loaded.duplicates_collapsed, 1u);
}

TEST(EdgeList, AcceptsTabsCommasCommentsAndBlankLines) {
  const auto g = parse("# header\n\na\tx\t1\nb,x,-1\nc y +1\n").graph;
  EXPECT_EQ(g.n_u(), 3u);
  EXPECT_EQ(g.n_v(), 2u);
  EXPECT_EQ(g.n_edges(), 3u);
}

TEST(EdgeList, ErrorsCarryLineNumbers) {
  try {
    parse("a x 1\nb y 2\n");
    FAIL() << "expected GraphError";
  } catch (const GraphError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
  EXPECT_THROW(parse("a x\n"), GraphError);
  EXPECT_THROW(parse("a x 1 extra\n"), GraphError);
}

TEST(EdgeList, MissingFileNamesPath) {
  try {
    load_edge_list("/nonexistent/edges.tsv");
    FAIL() << "expected GraphError";
  } catch (const GraphError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/edges.tsv"), std::string::npos);
  }
}

TEST(EdgeList, NumericIdsOrderNumerically) {
  const auto loaded = parse("10 1 1\n9 2 -1\n", IdMode::Numeric);
  ASSERT_EQ(loaded.names.u.size(), 2u);
  EXPECT_EQ(loaded.names.u[0], "9");
  EXPECT_EQ(loaded.names.u[1], "10");
  EXPECT_THROW(parse("x 1 1\n", IdMode::Numeric), GraphError);
}

TEST(EdgeList, IdsDoNotDependOnLineOrder) {
  const auto a = parse("b y 1\na x -1\na y 1\n");
  const auto b = parse("a y 1\nb y 1\na x -1\n");
  EXPECT_EQ(a.graph, b.graph);
  EXPECT_EQ(a.names.u, b.names.u);
}

TEST(EdgeList, WriteThenReloadRoundTrips) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = synthetic::random_graph(7, 9, 0.4, 0.6, seed);
    std::ostringstream first;
    write_edge_list(first, g);
    const auto reloaded = parse(first.str(), IdMode::Numeric);
    std::ostringstream second;
    write_edge_list(second, reloaded.graph, reloaded.names);
    EXPECT_EQ(first.str(), second.str());
  }
}

TEST(Graph, RejectsBadEdges) {
  EXPECT_THROW(SignedBipartiteGraph(1, 1, {{0, 1, Sign::Positive}}), GraphError);
  EXPECT_THROW(SignedBipartiteGraph(1, 1, {{0, 0, Sign::Positive}, {0, 0, Sign::Positive}}), GraphError);
}

TEST(Graph, NeighborsBySign) {
  const SignedBipartiteGraph g(2, 3, {{0, 0, Sign::Positive}, {0, 1, Sign::Negative}});
  const auto pos = g.neighbors({Side::U, 0}, Sign::Positive);
  ASSERT_EQ(pos.size(), 1u);
  EXPECT_EQ(pos[0], 0u);
  EXPECT_TRUE(g.neighbors({Side::U, 1}, Sign::Positive).empty());
  EXPECT_TRUE(g.neighbors({Side::V, 2}, Sign::Negative).empty());
  EXPECT_EQ(g.neighbors({Side::V, 1}, Sign::Negative)[0], 0u);
  EXPECT_EQ(g.degree({Side::U, 0}), 2u);
}

TEST(Graph, AdjacencyAgreesWithEdgeListOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = synthetic::random_graph(8, 6, 0.5, 0.5, seed);
    std::size_t seen = 0;
    for (Side side : {Side::U, Side::V})
      for (Index n = 0; n < g.size(side); ++n)
        for (Sign s : {Sign::Positive, Sign::Negative}) {
          const auto list = g.neighbors({side, n}, s);
          EXPECT_TRUE(std::is_sorted(list.begin(), list.end()));
          for (Index m : list) {
            Sign found{};
            const Index u = side == Side::U ? n : m;
            const Index v = side == Side::U ? m : n;
            ASSERT_TRUE(g.find_edge(u, v, &found));
            EXPECT_EQ(found, s);
            ++seen;
          }
        }
    EXPECT_EQ(seen, 2 * g.n_edges());
  }
}

TEST(Stats, BalancedFractions) {
  const auto s = compute_stats(SignedBipartiteGraph(1, 2, {{0, 0, Sign::Positive}, {0, 1, Sign::Negative}}));
  EXPECT_DOUBLE_EQ(s.pos_fraction, 0.5);
  EXPECT_DOUBLE_EQ(s.neg_fraction, 0.5);
  EXPECT_THROW(compute_stats(SignedBipartiteGraph(1, 1, {})), GraphError);
}

TEST(Split, ExactDivision) {
  const auto g = synthetic::planted_blocks({10, 10, 100, 0.9}, 1);
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
    const auto s = split_edges(g, {}, seed);
    EXPECT_EQ(s.train.size(), 85u);
    EXPECT_EQ(s.validation.size(), 5u);
    EXPECT_EQ(s.test.size(), 10u);
  }
}

TEST(Split, FloorRuleOn1170Edges) {
  // floor(0.05 * 1170) = 58, floor(0.10 * 1170) = 117, remainder 995.
  const auto g = synthetic::planted_blocks({40, 40, 1170, 0.9}, 2);
  const auto s = split_edges(g, {}, 5);
  EXPECT_EQ(s.test.size(), 117u);
  EXPECT_EQ(s.validation.size(), 58u);
  EXPECT_EQ(s.train.size(), 995u);
}

TEST(Split, SameSeedSamePartition) {
  const auto g = synthetic::random_graph(20, 20, 0.3, 0.5, 3);
  const auto a = split_edges(g, {}, 11);
  const auto b = split_edges(g, {}, 11);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.test, b.test);
  const auto c = split_edges(g, {}, 12);
  EXPECT_NE(a.test, c.test);
}

TEST(Split, PartitionsEveryEdgeExactlyOnce) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto g = synthetic::random_graph(12, 15, 0.3, 0.5, seed);
    if (g.n_edges() < 3) continue;
    const auto s = split_edges(g, {0.7, 0.1, 0.2}, seed);
    std::vector<std::size_t> all;
    for (const auto* part : {&s.train, &s.validation, &s.test}) all.insert(all.end(), part->begin(), part->end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(g.n_edges());
    std::iota(expected.begin(), expected.end(), 0);
    EXPECT_EQ(all, expected);
    EXPECT_NO_THROW(validate_split(g, s));
  }
}

TEST(Split, BadFractionsRejected) {
  EXPECT_THROW(check_fractions({0.5, 0.5, 0.5}), GraphError);
  EXPECT_THROW(check_fractions({1.0, 0.0, 0.0}), GraphError);
  EXPECT_NO_THROW(check_fractions({0.85, 0.05, 0.10}));
}

TEST(Split, ValidateRejectsOverlap) {
  const auto g = synthetic::random_graph(5, 5, 0.8, 0.5, 1);
  auto s = split_edges(g, {}, 1);
  s.test.push_back(s.train.front());
  EXPECT_THROW(validate_split(g, s), GraphError);
}

TEST(Graph, NegatedFlipsEverySign) {
  const auto g = synthetic::random_graph(6, 6, 0.5, 0.7, 4);
  const auto n = g.negated();
  ASSERT_EQ(n.n_edges(), g.n_edges());
  for (std::size_t i = 0; i < g.n_edges(); ++i) EXPECT_EQ(n.edge(i).sign, flip(g.edge(i).sign));
  EXPECT_EQ(n.negated(), g);
}

}  // namespace
}  // namespace sbgnn
