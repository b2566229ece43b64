#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "sbgnn/graph.hpp"

namespace sbgnn::balance {

/// The 7 signed butterfly classes. Labels list the signs of
/// (u1v1, u1v2, u2v1, u2v2) for the class representative.
enum class ButterflyClass : std::uint8_t { PPPP, PPPN, PNNP, PPNN, PNPN, PNNN, NNNN };
inline constexpr std::size_t kButterflyClasses = 7;
inline constexpr std::array<ButterflyClass, kButterflyClasses> kAllButterflyClasses{
    ButterflyClass::PPPP, ButterflyClass::PPPN, ButterflyClass::PNNP, ButterflyClass::PPNN,
    ButterflyClass::PNPN, ButterflyClass::PNNN, ButterflyClass::NNNN};

std::string_view label(ButterflyClass c);
int negative_count(ButterflyClass c);
bool is_balanced(ButterflyClass c);
/// Number of the 16 sign assignments that fall into the class.
int orbit_size(ButterflyClass c);
/// Class obtained by negating every edge.
ButterflyClass sign_flipped(ButterflyClass c);

/// Canonical class of a butterfly under swapping u1<->u2 and/or v1<->v2.
ButterflyClass classify_butterfly(Sign s11, Sign s12, Sign s21, Sign s22);

enum class TriangleClass : std::uint8_t { PPP, PPN, PNN, NNN };
inline constexpr std::size_t kTriangleClasses = 4;
inline constexpr std::array<TriangleClass, kTriangleClasses> kAllTriangleClasses{
    TriangleClass::PPP, TriangleClass::PPN, TriangleClass::PNN, TriangleClass::NNN};

std::string_view label(TriangleClass c);
int negative_count(TriangleClass c);
bool is_balanced(TriangleClass c);
TriangleClass classify_triangle(Sign a, Sign b, Sign c);

using ButterflyCounts = std::array<std::uint64_t, kButterflyClasses>;
using TriangleCounts = std::array<std::uint64_t, kTriangleClasses>;

/**
 * Class counts with their observed fractions and the expectation under a
 * random reassignment of signs that keeps the global positive ratio.
 * Expectations are NaN when that ratio is undefined (no edges).
 */
template <typename Class, std::size_t N>
struct Census {
  std::array<std::uint64_t, N> counts{};
  std::array<double, N> fractions{};
  std::array<double, N> expectations{};
  std::uint64_t total = 0;
  double positive_ratio = 0.0;
  double balanced_fraction = 0.0;
  double balanced_expectation = 0.0;

  std::uint64_t count(Class c) const { return counts[static_cast<std::size_t>(c)]; }
  double fraction(Class c) const { return fractions[static_cast<std::size_t>(c)]; }
  double expectation(Class c) const { return expectations[static_cast<std::size_t>(c)]; }
  double unbalanced_fraction() const { return total == 0 ? 0.0 : 1.0 - balanced_fraction; }
  double unbalanced_expectation() const { return 1.0 - balanced_expectation; }
};

using ButterflyCensus = Census<ButterflyClass, kButterflyClasses>;
using TriangleCensus = Census<TriangleClass, kTriangleClasses>;

/// orbit_size * p^#P * (1-p)^#N for positive ratio p.
double butterfly_expectation(double positive_ratio, ButterflyClass c);
double butterfly_expectation(const DatasetStats& stats, ButterflyClass c);

ButterflyCensus make_butterfly_census(const ButterflyCounts& counts, double positive_ratio);

/// Which node side supplies the pairs (u1, u2) or (v1, v2) whose common
/// neighbors are tallied. Auto picks the side with fewer wedges.
enum class PairSide { Auto, U, V };

/**
 * Counts every signed butterfly exactly once. For each pair on the pair side
 * the common neighbors are tallied by sign type (++, +-, -+, --) and the
 * butterflies follow combinatorially. Parallel over the first node of the
 * pair.
 */
ButterflyCounts count_butterflies_raw(const SignedBipartiteGraph& g, PairSide side = PairSide::Auto);
ButterflyCensus count_butterflies(const SignedBipartiteGraph& g, PairSide side = PairSide::Auto);

struct ProjectedEdge {
  Index i = 0;
  Index j = 0;
  Sign sign = Sign::Positive;
  std::uint32_t agree = 0;
  std::uint32_t disagree = 0;

  friend bool operator==(const ProjectedEdge&, const ProjectedEdge&) = default;
};

/// Same-side signed graph from sign construction. Edges have i < j, are
/// sorted, and carry the path counts that decided their sign.
struct ProjectedSignedGraph {
  Side side = Side::U;
  Index n = 0;
  std::vector<ProjectedEdge> edges;

  std::size_t n_positive() const;
  std::size_t n_negative() const { return edges.size() - n_positive(); }
  /// Share of positive edges; throws GraphError when there are no edges.
  double positive_ratio() const;
};

/**
 * Sign construction onto `side`: every pair with a common neighbor counts
 * agreeing paths (same signs) and disagreeing paths (opposite signs). The
 * majority decides the sign; ties produce no edge.
 */
ProjectedSignedGraph project_same_set(const SignedBipartiteGraph& g, Side side);

TriangleCounts count_signed_triangles_raw(const ProjectedSignedGraph& p);
TriangleCensus count_signed_triangles(const ProjectedSignedGraph& p);

/// C(3, #N) * q^#P * (1-q)^#N.
double triangle_expectation(double positive_ratio, TriangleClass c);
/// Uses the projected graph's own sign ratio; throws on an empty projection.
double triangle_expectation(const ProjectedSignedGraph& p, TriangleClass c);

TriangleCensus make_triangle_census(const TriangleCounts& counts, double positive_ratio);

/// Single-threaded reference implementations with a simpler (pairwise
/// merge) structure. Kept for cross-checking and benchmarking the kernels.
namespace serial {
ButterflyCounts count_butterflies(const SignedBipartiteGraph& g);
ProjectedSignedGraph project_same_set(const SignedBipartiteGraph& g, Side side);
TriangleCounts count_signed_triangles(const ProjectedSignedGraph& p);
}  // namespace serial

}  // namespace sbgnn::balance
