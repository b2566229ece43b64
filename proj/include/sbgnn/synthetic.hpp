#pragma once

#include <cstdint>

#include "sbgnn/graph.hpp"

namespace sbgnn::synthetic {

/// Uniform random signed bipartite graph: each (u, v) pair is an edge with
/// probability `density`, positive with probability `positive_ratio`.
SignedBipartiteGraph random_graph(Index n_u, Index n_v, double density, double positive_ratio,
                                  std::uint64_t seed);

struct PlantedBlocks {
  Index n_u = 40;
  Index n_v = 40;
  std::size_t n_edges = 800;
  /// Probability that an edge agrees with the block structure: positive
  /// inside aligned community pairs, negative across them.
  double agreement = 0.9;
};

/**
 * Two U-communities and two V-communities (first half / second half of each
 * side). `n_edges` distinct pairs are drawn uniformly; U-community k and
 * V-community k are aligned.
 */
SignedBipartiteGraph planted_blocks(const PlantedBlocks& spec, std::uint64_t seed);

}  // namespace sbgnn::synthetic
