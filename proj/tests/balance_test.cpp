#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <map>
#include <set>

#include "sbgnn/balance.hpp"
#include "sbgnn/synthetic.hpp"
#include "support.hpp"

namespace sbgnn::balance {
namespace {

using testing::as_sign;
constexpr Sign P = Sign::Positive;
constexpr Sign N = Sign::Negative;

std::size_t idx(ButterflyClass c) { return static_cast<std::size_t>(c); }

TEST(Classify, SpecCases) {
  EXPECT_EQ(classify_butterfly(P, P, P, P), ButterflyClass::PPPP);
  EXPECT_EQ(classify_butterfly(P, N, N, P), ButterflyClass::PNNP);
  EXPECT_EQ(classify_butterfly(N, P, P, P), ButterflyClass::PPPN);
  EXPECT_EQ(classify_butterfly(P, N, P, N), ButterflyClass::PNPN);
  EXPECT_EQ(classify_butterfly(P, P, N, N), ButterflyClass::PPNN);
  EXPECT_TRUE(is_balanced(ButterflyClass::PNNP));
  EXPECT_TRUE(is_balanced(ButterflyClass::PNPN));
  EXPECT_FALSE(is_balanced(ButterflyClass::PPPN));
}

// Orbits of the 16 sign matrices under the row/column swap group, computed by
// applying the 4 group elements directly.
TEST(Classify, MatchesSwapOrbitEnumeration) {
  auto encode = [](std::array<int, 4> m) { return (m[0] > 0) | (m[1] > 0) << 1 | (m[2] > 0) << 2 | (m[3] > 0) << 3; };
  auto images = [](std::array<int, 4> m) {
    // m = (s11, s12, s21, s22)
    return std::array<std::array<int, 4>, 4>{{
        m,
        {m[2], m[3], m[0], m[1]},  // swap rows
        {m[1], m[0], m[3], m[2]},  // swap columns
        {m[3], m[2], m[1], m[0]},  // both
    }};
  };
  std::map<int, std::set<int>> orbit_of;
  std::map<int, ButterflyClass> class_of;
  for (int code = 0; code < 16; ++code) {
    const std::array<int, 4> m{code & 1 ? 1 : -1, code & 2 ? 1 : -1, code & 4 ? 1 : -1, code & 8 ? 1 : -1};
    for (const auto& img : images(m)) orbit_of[code].insert(encode(img));
    class_of[code] = classify_butterfly(as_sign(m[0]), as_sign(m[1]), as_sign(m[2]), as_sign(m[3]));
  }
  std::set<std::set<int>> orbits;
  for (const auto& [code, orbit] : orbit_of) orbits.insert(orbit);
  ASSERT_EQ(orbits.size(), kButterflyClasses);
  std::set<ButterflyClass> classes_seen;
  for (const auto& orbit : orbits) {
    const ButterflyClass c = class_of[*orbit.begin()];
    for (int member : orbit) EXPECT_EQ(class_of[member], c);
    EXPECT_EQ(static_cast<int>(orbit.size()), orbit_size(c)) << label(c);
    classes_seen.insert(c);
  }
  EXPECT_EQ(classes_seen.size(), kButterflyClasses);
}

TEST(Classify, SignFlipIsAnInvolution) {
  EXPECT_EQ(sign_flipped(ButterflyClass::PPPP), ButterflyClass::NNNN);
  EXPECT_EQ(sign_flipped(ButterflyClass::PPPN), ButterflyClass::PNNN);
  EXPECT_EQ(sign_flipped(ButterflyClass::PNNP), ButterflyClass::PNNP);
  EXPECT_EQ(sign_flipped(ButterflyClass::PPNN), ButterflyClass::PPNN);
  EXPECT_EQ(sign_flipped(ButterflyClass::PNPN), ButterflyClass::PNPN);
  for (auto c : kAllButterflyClasses) EXPECT_EQ(sign_flipped(sign_flipped(c)), c);
}

TEST(Butterflies, CompleteTwoByTwo) {
  const SignedBipartiteGraph g(2, 2, {{0, 0, P}, {0, 1, P}, {1, 0, P}, {1, 1, P}});
  const auto c = count_butterflies(g);
  EXPECT_EQ(c.total, 1u);
  EXPECT_EQ(c.count(ButterflyClass::PPPP), 1u);
  EXPECT_DOUBLE_EQ(c.balanced_fraction, 1.0);
}

TEST(Butterflies, TwoByThreeAllPositive) {
  std::vector<SignedEdge> edges;
  for (Index u = 0; u < 2; ++u)
    for (Index v = 0; v < 3; ++v) edges.push_back({u, v, P});
  const auto c = count_butterflies(SignedBipartiteGraph(2, 3, edges));
  EXPECT_EQ(c.total, 3u);
  EXPECT_EQ(c.count(ButterflyClass::PPPP), 3u);
}

TEST(Butterflies, EqualBruteForceOnRandomGraphs) {
  int checked = 0;
  for (double p : {0.3, 0.5, 0.8})
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const Index n_u = 2 + seed % 14, n_v = 2 + (seed * 7) % 14;
      const auto g = synthetic::random_graph(n_u, n_v, 0.3 + 0.02 * (seed % 10), p, seed * 31 + 1);
      const auto oracle = testing::brute_force_butterflies(g);
      EXPECT_EQ(count_butterflies_raw(g, PairSide::U), oracle);
      EXPECT_EQ(count_butterflies_raw(g, PairSide::V), oracle);
      EXPECT_EQ(count_butterflies_raw(g, PairSide::Auto), oracle);
      EXPECT_EQ(serial::count_butterflies(g), oracle);
      ++checked;
    }
  EXPECT_EQ(checked, 90);
}

TEST(Butterflies, TransposeKeepsCountsExceptRowColumnClasses) {
  const auto g = synthetic::random_graph(9, 11, 0.5, 0.5, 17);
  std::vector<SignedEdge> t;
  for (const auto& e : g.edges()) t.push_back({e.v, e.u, e.sign});
  const auto a = count_butterflies_raw(g);
  const auto b = count_butterflies_raw(SignedBipartiteGraph(g.n_v(), g.n_u(), t));
  EXPECT_EQ(a[idx(ButterflyClass::PPNN)], b[idx(ButterflyClass::PNPN)]);
  EXPECT_EQ(a[idx(ButterflyClass::PNPN)], b[idx(ButterflyClass::PPNN)]);
  EXPECT_EQ(a[idx(ButterflyClass::PNNP)], b[idx(ButterflyClass::PNNP)]);
  EXPECT_EQ(a[idx(ButterflyClass::PPPN)], b[idx(ButterflyClass::PPPN)]);
}

TEST(Butterflies, SignFlipSymmetry) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = synthetic::random_graph(10, 10, 0.5, 0.6, seed);
    const auto a = count_butterflies_raw(g);
    const auto b = count_butterflies_raw(g.negated());
    for (auto c : kAllButterflyClasses) EXPECT_EQ(a[idx(c)], b[idx(sign_flipped(c))]);
  }
}

TEST(Butterflies, BalancedFractionBounds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = count_butterflies(synthetic::random_graph(10, 12, 0.5, 0.4, seed));
    EXPECT_GE(c.balanced_fraction, 0.0);
    EXPECT_LE(c.balanced_fraction, 1.0);
    EXPECT_NEAR(c.balanced_fraction + c.unbalanced_fraction(), 1.0, 1e-12);
    double sum = 0.0;
    for (double f : c.fractions) sum += f;
    if (c.total > 0) EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Expectation, TableValues) {
  EXPECT_NEAR(butterfly_expectation(0.540, ButterflyClass::PPPP), 0.085, 0.001);
  EXPECT_NEAR(butterfly_expectation(0.540, ButterflyClass::PPPN), 0.289, 0.002);
  EXPECT_NEAR(butterfly_expectation(0.397, ButterflyClass::PNPN), 0.115, 0.001);
}

TEST(Expectation, HandFormula) {
  EXPECT_DOUBLE_EQ(butterfly_expectation(0.540, ButterflyClass::PPPP), std::pow(0.54, 4));
  EXPECT_DOUBLE_EQ(butterfly_expectation(0.540, ButterflyClass::PPPN), 4 * std::pow(0.54, 3) * 0.46);
  EXPECT_DOUBLE_EQ(butterfly_expectation(0.397, ButterflyClass::PNPN), 2 * 0.397 * 0.397 * 0.603 * 0.603);
}

TEST(Expectation, DegenerateRatios) {
  EXPECT_DOUBLE_EQ(butterfly_expectation(1.0, ButterflyClass::PPPP), 1.0);
  for (auto c : kAllButterflyClasses)
    if (c != ButterflyClass::PPPP) EXPECT_DOUBLE_EQ(butterfly_expectation(1.0, c), 0.0);
}

TEST(Expectation, SumsToOne) {
  for (double p = 0.0; p <= 1.0; p += 0.05) {
    double b = 0.0, t = 0.0;
    for (auto c : kAllButterflyClasses) b += butterfly_expectation(p, c);
    for (auto c : kAllTriangleClasses) t += triangle_expectation(p, c);
    EXPECT_NEAR(b, 1.0, 1e-9);
    EXPECT_NEAR(t, 1.0, 1e-9);
  }
}

TEST(Expectation, TriangleFormula) {
  EXPECT_DOUBLE_EQ(triangle_expectation(0.5, TriangleClass::PPP), 0.125);
  EXPECT_DOUBLE_EQ(triangle_expectation(0.5, TriangleClass::PNN), 0.375);
}

TEST(Projection, SignConstruction) {
  {
    const auto p = project_same_set(SignedBipartiteGraph(2, 1, {{0, 0, P}, {1, 0, P}}), Side::U);
    ASSERT_EQ(p.edges.size(), 1u);
    EXPECT_EQ(p.edges[0].sign, P);
  }
  {
    const auto p = project_same_set(SignedBipartiteGraph(2, 1, {{0, 0, P}, {1, 0, N}}), Side::U);
    ASSERT_EQ(p.edges.size(), 1u);
    EXPECT_EQ(p.edges[0].sign, N);
  }
  {
    const auto p = project_same_set(SignedBipartiteGraph(2, 1, {{0, 0, N}, {1, 0, N}}), Side::U);
    EXPECT_EQ(p.edges.at(0).sign, P);
  }
}

TEST(Projection, MajorityAndTie) {
  // Agree on v0 and v1, disagree on v2.
  const SignedBipartiteGraph majority(2, 3, {{0, 0, P}, {1, 0, P}, {0, 1, N}, {1, 1, N}, {0, 2, P}, {1, 2, N}});
  const auto p = project_same_set(majority, Side::U);
  ASSERT_EQ(p.edges.size(), 1u);
  EXPECT_EQ(p.edges[0].sign, P);
  EXPECT_EQ(p.edges[0].agree, 2u);
  EXPECT_EQ(p.edges[0].disagree, 1u);

  const SignedBipartiteGraph tie(2, 2, {{0, 0, P}, {1, 0, P}, {0, 1, P}, {1, 1, N}});
  EXPECT_TRUE(project_same_set(tie, Side::U).edges.empty());
}

TEST(Projection, EqualsBruteForceOnBothSides) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto g = synthetic::random_graph(3 + seed % 12, 3 + (seed * 5) % 12, 0.35, 0.5, seed);
    for (Side side : {Side::U, Side::V}) {
      const auto oracle = testing::brute_force_projection(g, side);
      const auto p = project_same_set(g, side);
      ASSERT_EQ(p.edges.size(), oracle.size());
      for (const auto& e : p.edges) {
        ASSERT_LT(e.i, e.j);
        EXPECT_EQ(oracle.at({e.i, e.j}), sign_value(e.sign));
      }
      EXPECT_EQ(serial::project_same_set(g, side).edges, p.edges);
    }
  }
}

TEST(Triangles, SingleTriangles) {
  ProjectedSignedGraph p;
  p.n = 3;
  p.edges = {{0, 1, P, 1, 0}, {0, 2, P, 1, 0}, {1, 2, P, 1, 0}};
  auto c = count_signed_triangles(p);
  EXPECT_EQ(c.count(TriangleClass::PPP), 1u);
  EXPECT_DOUBLE_EQ(c.balanced_fraction, 1.0);

  p.edges = {{0, 1, P, 1, 0}, {0, 2, N, 0, 1}, {1, 2, N, 0, 1}};
  c = count_signed_triangles(p);
  EXPECT_EQ(c.count(TriangleClass::PNN), 1u);
  EXPECT_TRUE(is_balanced(TriangleClass::PNN));
  EXPECT_DOUBLE_EQ(c.balanced_fraction, 1.0);
}

TEST(Triangles, EqualBruteForceOnRandomGraphs) {
  for (double q : {0.3, 0.5, 0.8})
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      const auto g = synthetic::random_graph(3 + seed % 13, 3 + (seed * 3) % 13, 0.3, q, seed * 13 + 7);
      for (Side side : {Side::U, Side::V}) {
        const auto oracle = testing::brute_force_triangles(testing::brute_force_projection(g, side), g.size(side));
        const auto p = project_same_set(g, side);
        EXPECT_EQ(count_signed_triangles_raw(p), oracle);
        EXPECT_EQ(serial::count_signed_triangles(p), oracle);
      }
    }
}

TEST(Triangles, SignFlipOfProjectionMapsClasses) {
  // Negating the projected signs maps PPP<->NNN and PPN<->PNN.
  const auto g = synthetic::random_graph(14, 10, 0.4, 0.6, 3);
  auto p = project_same_set(g, Side::U);
  const auto a = count_signed_triangles_raw(p);
  for (auto& e : p.edges) e.sign = flip(e.sign);
  const auto b = count_signed_triangles_raw(p);
  EXPECT_EQ(a[0], b[3]);
  EXPECT_EQ(a[1], b[2]);
  EXPECT_EQ(a[2], b[1]);
  EXPECT_EQ(a[3], b[0]);
}

TEST(Census, UsesGraphPositiveRatio) {
  const auto g = synthetic::random_graph(10, 10, 0.5, 0.7, 9);
  const auto c = count_butterflies(g);
  const double p = static_cast<double>(g.n_positive()) / static_cast<double>(g.n_edges());
  EXPECT_DOUBLE_EQ(c.positive_ratio, p);
  for (auto k : kAllButterflyClasses) EXPECT_DOUBLE_EQ(c.expectation(k), butterfly_expectation(p, k));
}

TEST(Census, AllPositiveGraphIsFullyBalanced) {
  const auto g = synthetic::random_graph(10, 10, 0.6, 1.0, 2);
  EXPECT_DOUBLE_EQ(count_butterflies(g).balanced_fraction, 1.0);
  EXPECT_DOUBLE_EQ(count_signed_triangles(project_same_set(g, Side::U)).balanced_fraction, 1.0);
}

}  // namespace
}  // namespace sbgnn::balance
