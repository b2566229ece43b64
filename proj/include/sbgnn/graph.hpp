#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbgnn {

enum class Side : std::uint8_t { U, V };
enum class Sign : std::int8_t { Negative = -1, Positive = 1 };

inline Side opposite(Side s) { return s == Side::U ? Side::V : Side::U; }
inline Sign flip(Sign s) { return s == Sign::Positive ? Sign::Negative : Sign::Positive; }
inline int sign_value(Sign s) { return static_cast<int>(s); }

using Index = std::uint32_t;

struct NodeId {
  Side side = Side::U;
  Index index = 0;

  friend bool operator==(const NodeId&, const NodeId&) = default;
};

struct SignedEdge {
  Index u = 0;
  Index v = 0;
  Sign sign = Sign::Positive;

  friend bool operator==(const SignedEdge&, const SignedEdge&) = default;
};

/// Raised for any malformed or inconsistent graph input. `line()` is 0 when
/// the problem is not tied to a specific input line.
class GraphError : public std::runtime_error {
 public:
  explicit GraphError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/**
 * Two node sets with signed edges between them. Immutable after
 * construction; edges are kept sorted by (u, v) and each node has one
 * sorted neighbor list per sign.
 */
class SignedBipartiteGraph {
 public:
  SignedBipartiteGraph() = default;

  /// Builds the graph and its adjacency. Throws GraphError on out-of-range
  /// endpoints or on two edges sharing a (u, v) pair.
  SignedBipartiteGraph(Index n_u, Index n_v, std::vector<SignedEdge> edges);

  Index n_u() const { return n_u_; }
  Index n_v() const { return n_v_; }
  Index size(Side s) const { return s == Side::U ? n_u_ : n_v_; }
  std::size_t n_edges() const { return edges_.size(); }
  std::size_t n_positive() const { return n_positive_; }
  std::size_t n_negative() const { return edges_.size() - n_positive_; }

  std::span<const SignedEdge> edges() const { return edges_; }
  const SignedEdge& edge(std::size_t i) const { return edges_[i]; }

  /// Opposite-side neighbors of `node` joined by edges of `sign`, sorted.
  std::span<const Index> neighbors(NodeId node, Sign sign) const;

  /// Degree over both signs.
  std::size_t degree(NodeId node) const;

  /// Sign of edge (u, v) if present.
  bool find_edge(Index u, Index v, Sign* sign = nullptr) const;

  /// Subgraph over the same node sets keeping the listed edge indices.
  SignedBipartiteGraph subgraph(std::span<const std::size_t> edge_indices) const;

  /// Same graph with every sign negated.
  SignedBipartiteGraph negated() const;

  friend bool operator==(const SignedBipartiteGraph& a, const SignedBipartiteGraph& b) {
    return a.n_u_ == b.n_u_ && a.n_v_ == b.n_v_ && a.edges_ == b.edges_;
  }

 private:
  struct Csr {
    std::vector<std::size_t> offsets;
    std::vector<Index> targets;
  };
  const Csr& adjacency(Side side, Sign sign) const;

  Index n_u_ = 0;
  Index n_v_ = 0;
  std::size_t n_positive_ = 0;
  std::vector<SignedEdge> edges_;
  Csr u_pos_, u_neg_, v_pos_, v_neg_;
};

enum class IdMode { Named, Numeric };

/// Original identifiers for the densified node ids, per side.
struct NodeNames {
  std::vector<std::string> u;
  std::vector<std::string> v;
};

struct LoadedGraph {
  SignedBipartiteGraph graph;
  NodeNames names;
  std::size_t duplicates_collapsed = 0;
};

/**
 * Reads an edge list: one `<u> <v> <sign>` triple per line, separated by a
 * tab, single spaces or commas, sign in {1, -1}. Lines starting with `#` and
 * blank lines are skipped. Dense ids follow the sorted order of the original
 * identifiers (lexicographic for Named, numeric for Numeric), so the result
 * does not depend on line order.
 */
LoadedGraph load_edge_list(const std::filesystem::path& path, IdMode mode = IdMode::Named);
LoadedGraph parse_edge_list(std::istream& in, IdMode mode = IdMode::Named);

/// Writes the canonical format: tab separated, sorted by (u, v).
void write_edge_list(std::ostream& out, const SignedBipartiteGraph& g, const NodeNames& names);
void write_edge_list(std::ostream& out, const SignedBipartiteGraph& g);

struct DatasetStats {
  std::size_t n_u = 0;
  std::size_t n_v = 0;
  std::size_t n_edges = 0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  double pos_fraction = 0.0;
  double neg_fraction = 0.0;
};

DatasetStats compute_stats(const SignedBipartiteGraph& g);

struct SplitFractions {
  double train = 0.85;
  double validation = 0.05;
  double test = 0.10;
};

struct EdgeSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  SplitFractions fractions;
};

/// Validates that all fractions are positive and sum to 1.
void check_fractions(const SplitFractions& f);

/**
 * Uniformly permutes edge indices with a generator seeded only by `seed`,
 * then takes floor(validation * E) and floor(test * E) edges for the
 * held-out sets. The rounding remainder goes to train.
 */
EdgeSplit split_edges(const SignedBipartiteGraph& g, const SplitFractions& fractions,
                      std::uint64_t seed);

/// Throws GraphError unless the split is a disjoint cover of g's edges.
void validate_split(const SignedBipartiteGraph& g, const EdgeSplit& split);

}  // namespace sbgnn
