#include "sbgnn/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace sbgnn::synthetic {

SignedBipartiteGraph random_graph(Index n_u, Index n_v, double density, double positive_ratio,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution has_edge(density);
  std::bernoulli_distribution positive(positive_ratio);
  std::vector<SignedEdge> edges;
  for (Index u = 0; u < n_u; ++u)
    for (Index v = 0; v < n_v; ++v)
      if (has_edge(rng)) edges.push_back({u, v, positive(rng) ? Sign::Positive : Sign::Negative});
  return SignedBipartiteGraph(n_u, n_v, std::move(edges));
}

SignedBipartiteGraph planted_blocks(const PlantedBlocks& spec, std::uint64_t seed) {
  const std::size_t pairs = static_cast<std::size_t>(spec.n_u) * spec.n_v;
  if (spec.n_edges > pairs) throw std::invalid_argument("more edges requested than node pairs");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> cells(pairs);
  std::iota(cells.begin(), cells.end(), 0);
  std::shuffle(cells.begin(), cells.end(), rng);
  cells.resize(spec.n_edges);

  std::bernoulli_distribution agrees(spec.agreement);
  std::vector<SignedEdge> edges;
  edges.reserve(spec.n_edges);
  for (std::size_t cell : cells) {
    const auto u = static_cast<Index>(cell / spec.n_v);
    const auto v = static_cast<Index>(cell % spec.n_v);
    const bool aligned = (u < spec.n_u / 2) == (v < spec.n_v / 2);
    const bool positive = agrees(rng) ? aligned : !aligned;
    edges.push_back({u, v, positive ? Sign::Positive : Sign::Negative});
  }
  return SignedBipartiteGraph(spec.n_u, spec.n_v, std::move(edges));
}

}  // namespace sbgnn::synthetic
