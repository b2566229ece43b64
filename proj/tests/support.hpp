#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sbgnn/balance.hpp"
#include "sbgnn/graph.hpp"

namespace sbgnn::testing {

/// Dense sign lookup: 0 absent, +1 / -1 present.
inline std::vector<std::vector<int>> sign_matrix(const SignedBipartiteGraph& g) {
  std::vector<std::vector<int>> m(g.n_u(), std::vector<int>(g.n_v(), 0));
  for (const auto& e : g.edges()) m[e.u][e.v] = sign_value(e.sign);
  return m;
}

inline Sign as_sign(int s) { return s > 0 ? Sign::Positive : Sign::Negative; }

/// Every (u1 < u2, v1 < v2) quadruple with all four edges present.
inline balance::ButterflyCounts brute_force_butterflies(const SignedBipartiteGraph& g) {
  const auto m = sign_matrix(g);
  balance::ButterflyCounts counts{};
  for (Index u1 = 0; u1 < g.n_u(); ++u1)
    for (Index u2 = u1 + 1; u2 < g.n_u(); ++u2)
      for (Index v1 = 0; v1 < g.n_v(); ++v1)
        for (Index v2 = v1 + 1; v2 < g.n_v(); ++v2) {
          if (!m[u1][v1] || !m[u1][v2] || !m[u2][v1] || !m[u2][v2]) continue;
          const auto c = balance::classify_butterfly(as_sign(m[u1][v1]), as_sign(m[u1][v2]),
                                                     as_sign(m[u2][v1]), as_sign(m[u2][v2]));
          ++counts[static_cast<std::size_t>(c)];
        }
  return counts;
}

/// Same-side signed graph by scanning every pair and every opposite node.
/// Result maps (i, j), i < j, to +1 / -1.
inline std::map<std::pair<Index, Index>, int> brute_force_projection(const SignedBipartiteGraph& g, Side side) {
  const auto m = sign_matrix(g);
  const Index n = g.size(side);
  const Index other = g.size(opposite(side));
  std::map<std::pair<Index, Index>, int> out;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      int agree = 0, disagree = 0;
      for (Index k = 0; k < other; ++k) {
        const int a = side == Side::U ? m[i][k] : m[k][i];
        const int b = side == Side::U ? m[j][k] : m[k][j];
        if (!a || !b) continue;
        (a == b ? agree : disagree)++;
      }
      if (agree > disagree) out[{i, j}] = 1;
      else if (disagree > agree) out[{i, j}] = -1;
    }
  return out;
}

inline balance::TriangleCounts brute_force_triangles(const std::map<std::pair<Index, Index>, int>& p, Index n) {
  balance::TriangleCounts counts{};
  auto sign_of = [&](Index a, Index b) {
    auto it = p.find({a, b});
    return it == p.end() ? 0 : it->second;
  };
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const int s_ij = sign_of(i, j);
      if (!s_ij) continue;
      for (Index k = j + 1; k < n; ++k) {
        const int s_ik = sign_of(i, k), s_jk = sign_of(j, k);
        if (!s_ik || !s_jk) continue;
        int negatives = (s_ij < 0) + (s_ik < 0) + (s_jk < 0);
        ++counts[static_cast<std::size_t>(negatives)];
      }
    }
  return counts;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sbgnn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sbgnn::testing
