#include "sbgnn/balance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sbgnn::balance {

namespace {

constexpr std::array<std::string_view, kButterflyClasses> kButterflyLabels{
    "PPPP", "PPPN", "PNNP", "PPNN", "PNPN", "PNNN", "NNNN"};
constexpr std::array<int, kButterflyClasses> kButterflyNegatives{0, 1, 2, 2, 2, 3, 4};
constexpr std::array<int, kButterflyClasses> kOrbitSizes{1, 4, 2, 2, 2, 4, 1};
constexpr std::array<std::string_view, kTriangleClasses> kTriangleLabels{"PPP", "PPN", "PNN", "NNN"};

std::size_t idx(ButterflyClass c) { return static_cast<std::size_t>(c); }
std::size_t idx(TriangleClass c) { return static_cast<std::size_t>(c); }

bool neg(Sign s) { return s == Sign::Negative; }
Sign sign_of(bool negative) { return negative ? Sign::Negative : Sign::Positive; }

// Combined per-node adjacency over both signs, sorted by neighbor.
struct SignedAdjacency {
  std::vector<std::size_t> offsets;
  std::vector<Index> nbr;
  std::vector<std::uint8_t> negative;

  SignedAdjacency(const SignedBipartiteGraph& g, Side side) {
    const Index n = g.size(side);
    offsets.assign(n + 1, 0);
    nbr.reserve(g.n_edges());
    negative.reserve(g.n_edges());
    for (Index i = 0; i < n; ++i) {
      auto pos = g.neighbors({side, i}, Sign::Positive);
      auto ng = g.neighbors({side, i}, Sign::Negative);
      std::size_t a = 0, b = 0;
      while (a < pos.size() || b < ng.size()) {
        if (b == ng.size() || (a < pos.size() && pos[a] < ng[b])) {
          nbr.push_back(pos[a++]);
          negative.push_back(0);
        } else {
          nbr.push_back(ng[b++]);
          negative.push_back(1);
        }
      }
      offsets[i + 1] = nbr.size();
    }
  }
};

std::uint64_t choose2(std::uint64_t n) { return n * (n - 1) / 2; }

Side resolve_pair_side(const SignedBipartiteGraph& g, PairSide side) {
  if (side == PairSide::U) return Side::U;
  if (side == PairSide::V) return Side::V;
  // Pairs on one side are found through wedges centered on the other side.
  auto wedges = [&g](Side center) {
    std::uint64_t w = 0;
    for (Index i = 0; i < g.size(center); ++i) {
      const std::uint64_t d = g.degree({center, i});
      w += d * d;
    }
    return w;
  };
  return wedges(Side::V) <= wedges(Side::U) ? Side::U : Side::V;
}

// Sign type of a common neighbor of (r1, r2): bit 1 = r1 edge negative,
// bit 0 = r2 edge negative.
using TypeTable = std::array<std::array<ButterflyClass, 4>, 4>;

TypeTable make_type_table(Side rows) {
  TypeTable table{};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const Sign r1a = sign_of(a & 2), r2a = sign_of(a & 1);
      const Sign r1b = sign_of(b & 2), r2b = sign_of(b & 1);
      // Sign order is (u1v1, u1v2, u2v1, u2v2); with V-side pairs the
      // common neighbors play the role of u1, u2.
      table[a][b] = rows == Side::U ? classify_butterfly(r1a, r1b, r2a, r2b)
                                    : classify_butterfly(r1a, r2a, r1b, r2b);
    }
  }
  return table;
}

template <typename Array>
void finalize(const Array& counts, std::uint64_t& total, auto& fractions) {
  total = 0;
  for (auto c : counts) total += c;
  for (std::size_t i = 0; i < counts.size(); ++i)
    fractions[i] = total == 0 ? 0.0 : static_cast<double>(counts[i]) / static_cast<double>(total);
}

}  // namespace

// ---------------------------------------------------------------------------
// Classes

std::string_view label(ButterflyClass c) { return kButterflyLabels[idx(c)]; }
int negative_count(ButterflyClass c) { return kButterflyNegatives[idx(c)]; }
bool is_balanced(ButterflyClass c) { return negative_count(c) % 2 == 0; }
int orbit_size(ButterflyClass c) { return kOrbitSizes[idx(c)]; }

ButterflyClass sign_flipped(ButterflyClass c) {
  switch (c) {
    case ButterflyClass::PPPP: return ButterflyClass::NNNN;
    case ButterflyClass::NNNN: return ButterflyClass::PPPP;
    case ButterflyClass::PPPN: return ButterflyClass::PNNN;
    case ButterflyClass::PNNN: return ButterflyClass::PPPN;
    default: return c;
  }
}

ButterflyClass classify_butterfly(Sign s11, Sign s12, Sign s21, Sign s22) {
  const int negatives = neg(s11) + neg(s12) + neg(s21) + neg(s22);
  switch (negatives) {
    case 0: return ButterflyClass::PPPP;
    case 1: return ButterflyClass::PPPN;
    case 3: return ButterflyClass::PNNN;
    case 4: return ButterflyClass::NNNN;
    default: break;
  }
  if (s11 == s12) return ButterflyClass::PPNN;  // each u row is constant
  if (s11 == s21) return ButterflyClass::PNPN;  // each v column is constant
  return ButterflyClass::PNNP;                  // agreement on the diagonal
}

std::string_view label(TriangleClass c) { return kTriangleLabels[idx(c)]; }
int negative_count(TriangleClass c) { return static_cast<int>(idx(c)); }
bool is_balanced(TriangleClass c) { return negative_count(c) % 2 == 0; }

TriangleClass classify_triangle(Sign a, Sign b, Sign c) {
  return static_cast<TriangleClass>(neg(a) + neg(b) + neg(c));
}

// ---------------------------------------------------------------------------
// Expectations and census assembly

double butterfly_expectation(double p, ButterflyClass c) {
  const int n_neg = negative_count(c);
  return orbit_size(c) * std::pow(p, 4 - n_neg) * std::pow(1.0 - p, n_neg);
}

double butterfly_expectation(const DatasetStats& stats, ButterflyClass c) {
  return butterfly_expectation(stats.pos_fraction, c);
}

ButterflyCensus make_butterfly_census(const ButterflyCounts& counts, double positive_ratio) {
  ButterflyCensus census;
  census.counts = counts;
  census.positive_ratio = positive_ratio;
  finalize(counts, census.total, census.fractions);
  for (auto c : kAllButterflyClasses) {
    census.expectations[idx(c)] = butterfly_expectation(positive_ratio, c);
    if (is_balanced(c)) {
      census.balanced_fraction += census.fractions[idx(c)];
      census.balanced_expectation += census.expectations[idx(c)];
    }
  }
  return census;
}

double triangle_expectation(double q, TriangleClass c) {
  static constexpr std::array<int, 4> kBinom3{1, 3, 3, 1};
  const int n_neg = negative_count(c);
  return kBinom3[idx(c)] * std::pow(q, 3 - n_neg) * std::pow(1.0 - q, n_neg);
}

double triangle_expectation(const ProjectedSignedGraph& p, TriangleClass c) {
  return triangle_expectation(p.positive_ratio(), c);
}

TriangleCensus make_triangle_census(const TriangleCounts& counts, double positive_ratio) {
  TriangleCensus census;
  census.counts = counts;
  census.positive_ratio = positive_ratio;
  finalize(counts, census.total, census.fractions);
  for (auto c : kAllTriangleClasses) {
    census.expectations[idx(c)] = triangle_expectation(positive_ratio, c);
    if (is_balanced(c)) {
      census.balanced_fraction += census.fractions[idx(c)];
      census.balanced_expectation += census.expectations[idx(c)];
    }
  }
  return census;
}

std::size_t ProjectedSignedGraph::n_positive() const {
  return static_cast<std::size_t>(std::count_if(
      edges.begin(), edges.end(), [](const ProjectedEdge& e) { return e.sign == Sign::Positive; }));
}

double ProjectedSignedGraph::positive_ratio() const {
  if (edges.empty()) throw GraphError("projected graph has no edges");
  return static_cast<double>(n_positive()) / static_cast<double>(edges.size());
}

// ---------------------------------------------------------------------------
// Parallel kernels

ButterflyCounts count_butterflies_raw(const SignedBipartiteGraph& g, PairSide side) {
  const Side rows = resolve_pair_side(g, side);
  const Side centers = opposite(rows);
  const SignedAdjacency row_adj(g, rows);
  const SignedAdjacency center_adj(g, centers);
  const TypeTable table = make_type_table(rows);
  const auto n_rows = static_cast<std::int64_t>(g.size(rows));

  ButterflyCounts total{};
#pragma omp parallel
  {
    std::vector<std::array<std::uint32_t, 4>> tally(static_cast<std::size_t>(n_rows));
    std::vector<Index> touched;
    ButterflyCounts local{};

#pragma omp for schedule(dynamic, 16) nowait
    for (std::int64_t r1 = 0; r1 < n_rows; ++r1) {
      for (std::size_t e = row_adj.offsets[r1]; e < row_adj.offsets[r1 + 1]; ++e) {
        const Index c = row_adj.nbr[e];
        const int bit1 = row_adj.negative[e] << 1;
        const auto cbegin = center_adj.nbr.begin() + static_cast<std::ptrdiff_t>(center_adj.offsets[c]);
        const auto cend = center_adj.nbr.begin() + static_cast<std::ptrdiff_t>(center_adj.offsets[c + 1]);
        for (auto it = std::upper_bound(cbegin, cend, static_cast<Index>(r1)); it != cend; ++it) {
          auto& t = tally[*it];
          if ((t[0] | t[1] | t[2] | t[3]) == 0) touched.push_back(*it);
          ++t[bit1 | center_adj.negative[static_cast<std::size_t>(it - center_adj.nbr.begin())]];
        }
      }
      for (Index r2 : touched) {
        auto& t = tally[r2];
        for (int a = 0; a < 4; ++a) {
          if (t[a] == 0) continue;
          local[idx(table[a][a])] += choose2(t[a]);
          for (int b = a + 1; b < 4; ++b)
            local[idx(table[a][b])] += static_cast<std::uint64_t>(t[a]) * t[b];
        }
        t = {};
      }
      touched.clear();
    }
#pragma omp critical(sbgnn_butterfly_merge)
    for (std::size_t k = 0; k < kButterflyClasses; ++k) total[k] += local[k];
  }
  return total;
}

ButterflyCensus count_butterflies(const SignedBipartiteGraph& g, PairSide side) {
  const double p = g.n_edges() == 0 ? std::numeric_limits<double>::quiet_NaN()
                                    : compute_stats(g).pos_fraction;
  return make_butterfly_census(count_butterflies_raw(g, side), p);
}

ProjectedSignedGraph project_same_set(const SignedBipartiteGraph& g, Side side) {
  const SignedAdjacency row_adj(g, side);
  const SignedAdjacency center_adj(g, opposite(side));
  const auto n = static_cast<std::int64_t>(g.size(side));
  std::vector<std::vector<ProjectedEdge>> per_row(static_cast<std::size_t>(n));

#pragma omp parallel
  {
    std::vector<std::array<std::uint32_t, 2>> tally(static_cast<std::size_t>(n));
    std::vector<Index> touched;

#pragma omp for schedule(dynamic, 16)
    for (std::int64_t r1 = 0; r1 < n; ++r1) {
      for (std::size_t e = row_adj.offsets[r1]; e < row_adj.offsets[r1 + 1]; ++e) {
        const Index c = row_adj.nbr[e];
        const std::uint8_t n1 = row_adj.negative[e];
        const auto cbegin = center_adj.nbr.begin() + static_cast<std::ptrdiff_t>(center_adj.offsets[c]);
        const auto cend = center_adj.nbr.begin() + static_cast<std::ptrdiff_t>(center_adj.offsets[c + 1]);
        for (auto it = std::upper_bound(cbegin, cend, static_cast<Index>(r1)); it != cend; ++it) {
          auto& t = tally[*it];
          if ((t[0] | t[1]) == 0) touched.push_back(*it);
          const auto pos = static_cast<std::size_t>(it - center_adj.nbr.begin());
          ++t[n1 != center_adj.negative[pos]];  // 0 agree, 1 disagree
        }
      }
      std::sort(touched.begin(), touched.end());
      auto& out = per_row[static_cast<std::size_t>(r1)];
      for (Index r2 : touched) {
        auto& t = tally[r2];
        if (t[0] != t[1]) {
          out.push_back({static_cast<Index>(r1), r2, t[0] > t[1] ? Sign::Positive : Sign::Negative,
                         t[0], t[1]});
        }
        t = {};
      }
      touched.clear();
    }
  }

  ProjectedSignedGraph p;
  p.side = side;
  p.n = g.size(side);
  std::size_t total = 0;
  for (const auto& row : per_row) total += row.size();
  p.edges.reserve(total);
  for (auto& row : per_row) p.edges.insert(p.edges.end(), row.begin(), row.end());
  return p;
}

TriangleCounts count_signed_triangles_raw(const ProjectedSignedGraph& p) {
  // Forward adjacency: neighbors j > i, sorted (edges are sorted by (i, j)).
  std::vector<std::size_t> offsets(p.n + 1, 0);
  for (const auto& e : p.edges) ++offsets[e.i + 1];
  for (Index i = 0; i < p.n; ++i) offsets[i + 1] += offsets[i];
  std::vector<Index> nbr(p.edges.size());
  std::vector<std::uint8_t> negative(p.edges.size());
  {
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const auto& e : p.edges) {
      nbr[cursor[e.i]] = e.j;
      negative[cursor[e.i]++] = e.sign == Sign::Negative;
    }
    for (Index i = 0; i < p.n; ++i) {
      const auto b = static_cast<std::ptrdiff_t>(offsets[i]);
      const auto len = offsets[i + 1] - offsets[i];
      if (!std::is_sorted(nbr.begin() + b, nbr.begin() + b + static_cast<std::ptrdiff_t>(len)))
        throw GraphError("projected edges must be sorted by (i, j)");
    }
  }

  std::uint64_t c0 = 0, c1 = 0, c2 = 0, c3 = 0;
  const auto n = static_cast<std::int64_t>(p.n);
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : c0, c1, c2, c3)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::size_t ib = offsets[i], ie = offsets[i + 1];
    for (std::size_t a = ib; a < ie; ++a) {
      const Index j = nbr[a];
      const int neg_ij = negative[a];
      // Merge the tail of N+(i) beyond j with N+(j).
      std::size_t x = a + 1, y = offsets[j];
      const std::size_t ye = offsets[j + 1];
      while (x < ie && y < ye) {
        if (nbr[x] < nbr[y]) {
          ++x;
        } else if (nbr[y] < nbr[x]) {
          ++y;
        } else {
          switch (neg_ij + negative[x] + negative[y]) {
            case 0: ++c0; break;
            case 1: ++c1; break;
            case 2: ++c2; break;
            default: ++c3; break;
          }
          ++x;
          ++y;
        }
      }
    }
  }
  return {c0, c1, c2, c3};
}

TriangleCensus count_signed_triangles(const ProjectedSignedGraph& p) {
  const double q = p.edges.empty() ? std::numeric_limits<double>::quiet_NaN() : p.positive_ratio();
  return make_triangle_census(count_signed_triangles_raw(p), q);
}

// ---------------------------------------------------------------------------
// Serial references

namespace serial {

namespace {

std::vector<std::pair<Index, Sign>> signed_neighbors(const SignedBipartiteGraph& g, NodeId node) {
  std::vector<std::pair<Index, Sign>> out;
  for (Sign s : {Sign::Positive, Sign::Negative})
    for (Index x : g.neighbors(node, s)) out.emplace_back(x, s);
  std::sort(out.begin(), out.end());
  return out;
}

// Common neighbors of two same-side nodes with the sign each one uses.
struct Common {
  Index center;
  Sign first;
  Sign second;
};

std::vector<Common> common_neighbors(const std::vector<std::pair<Index, Sign>>& a,
                                     const std::vector<std::pair<Index, Sign>>& b) {
  std::vector<Common> out;
  std::size_t x = 0, y = 0;
  while (x < a.size() && y < b.size()) {
    if (a[x].first < b[y].first) {
      ++x;
    } else if (b[y].first < a[x].first) {
      ++y;
    } else {
      out.push_back({a[x].first, a[x].second, b[y].second});
      ++x;
      ++y;
    }
  }
  return out;
}

}  // namespace

ButterflyCounts count_butterflies(const SignedBipartiteGraph& g) {
  std::vector<std::vector<std::pair<Index, Sign>>> adj(g.n_u());
  for (Index u = 0; u < g.n_u(); ++u) adj[u] = signed_neighbors(g, {Side::U, u});
  ButterflyCounts counts{};
  for (Index u1 = 0; u1 < g.n_u(); ++u1) {
    for (Index u2 = u1 + 1; u2 < g.n_u(); ++u2) {
      const auto common = common_neighbors(adj[u1], adj[u2]);
      for (std::size_t a = 0; a < common.size(); ++a)
        for (std::size_t b = a + 1; b < common.size(); ++b)
          ++counts[idx(classify_butterfly(common[a].first, common[b].first, common[a].second,
                                          common[b].second))];
    }
  }
  return counts;
}

ProjectedSignedGraph project_same_set(const SignedBipartiteGraph& g, Side side) {
  const Index n = g.size(side);
  std::vector<std::vector<std::pair<Index, Sign>>> adj(n);
  for (Index i = 0; i < n; ++i) adj[i] = signed_neighbors(g, {side, i});
  ProjectedSignedGraph p;
  p.side = side;
  p.n = n;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      std::uint32_t agree = 0, disagree = 0;
      for (const auto& c : common_neighbors(adj[i], adj[j])) (c.first == c.second ? agree : disagree)++;
      if (agree != disagree)
        p.edges.push_back({i, j, agree > disagree ? Sign::Positive : Sign::Negative, agree, disagree});
    }
  }
  return p;
}

TriangleCounts count_signed_triangles(const ProjectedSignedGraph& p) {
  auto find = [&p](Index a, Index b) -> const ProjectedEdge* {
    auto it = std::lower_bound(p.edges.begin(), p.edges.end(), std::pair{a, b},
                               [](const ProjectedEdge& e, const std::pair<Index, Index>& key) {
                                 return e.i != key.first ? e.i < key.first : e.j < key.second;
                               });
    return it != p.edges.end() && it->i == a && it->j == b ? &*it : nullptr;
  };
  TriangleCounts counts{};
  for (const auto& ij : p.edges) {
    for (auto it = &ij + 1; it != p.edges.data() + p.edges.size() && it->i == ij.i; ++it) {
      const ProjectedEdge* jk = find(ij.j, it->j);
      if (jk) ++counts[idx(classify_triangle(ij.sign, it->sign, jk->sign))];
    }
  }
  return counts;
}

}  // namespace serial

}  // namespace sbgnn::balance
