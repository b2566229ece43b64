#include "sbgnn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

namespace sbgnn {

namespace {

void build_csr(std::size_t n_nodes, const std::vector<std::pair<Index, Index>>& pairs,
               std::vector<std::size_t>& offsets, std::vector<Index>& targets) {
  offsets.assign(n_nodes + 1, 0);
  for (const auto& [src, dst] : pairs) ++offsets[src + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  targets.resize(pairs.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (const auto& [src, dst] : pairs) targets[cursor[src]++] = dst;
  for (std::size_t i = 0; i < n_nodes; ++i)
    std::sort(targets.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
              targets.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]));
}

}  // namespace

SignedBipartiteGraph::SignedBipartiteGraph(Index n_u, Index n_v, std::vector<SignedEdge> edges)
    : n_u_(n_u), n_v_(n_v), edges_(std::move(edges)) {
  std::sort(edges_.begin(), edges_.end(), [](const SignedEdge& a, const SignedEdge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  std::vector<std::pair<Index, Index>> up, un, vp, vn;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    if (e.u >= n_u_ || e.v >= n_v_)
      throw GraphError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                       ") out of range");
    if (i > 0 && edges_[i - 1].u == e.u && edges_[i - 1].v == e.v)
      throw GraphError("duplicate edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) + ")");
    if (e.sign == Sign::Positive) {
      ++n_positive_;
      up.emplace_back(e.u, e.v);
      vp.emplace_back(e.v, e.u);
    } else {
      un.emplace_back(e.u, e.v);
      vn.emplace_back(e.v, e.u);
    }
  }
  build_csr(n_u_, up, u_pos_.offsets, u_pos_.targets);
  build_csr(n_u_, un, u_neg_.offsets, u_neg_.targets);
  build_csr(n_v_, vp, v_pos_.offsets, v_pos_.targets);
  build_csr(n_v_, vn, v_neg_.offsets, v_neg_.targets);
}

const SignedBipartiteGraph::Csr& SignedBipartiteGraph::adjacency(Side side, Sign sign) const {
  if (side == Side::U) return sign == Sign::Positive ? u_pos_ : u_neg_;
  return sign == Sign::Positive ? v_pos_ : v_neg_;
}

std::span<const Index> SignedBipartiteGraph::neighbors(NodeId node, Sign sign) const {
  if (node.index >= size(node.side))
    throw GraphError("invalid node index " + std::to_string(node.index));
  const Csr& csr = adjacency(node.side, sign);
  const std::size_t begin = csr.offsets[node.index];
  const std::size_t end = csr.offsets[node.index + 1];
  return std::span<const Index>(csr.targets.data() + begin, end - begin);
}

std::size_t SignedBipartiteGraph::degree(NodeId node) const {
  return neighbors(node, Sign::Positive).size() + neighbors(node, Sign::Negative).size();
}

bool SignedBipartiteGraph::find_edge(Index u, Index v, Sign* sign) const {
  if (u >= n_u_ || v >= n_v_) return false;
  for (Sign s : {Sign::Positive, Sign::Negative}) {
    auto nb = neighbors({Side::U, u}, s);
    if (std::binary_search(nb.begin(), nb.end(), v)) {
      if (sign) *sign = s;
      return true;
    }
  }
  return false;
}

SignedBipartiteGraph SignedBipartiteGraph::subgraph(std::span<const std::size_t> edge_indices) const {
  std::vector<SignedEdge> kept;
  kept.reserve(edge_indices.size());
  for (std::size_t i : edge_indices) {
    if (i >= edges_.size()) throw GraphError("edge index " + std::to_string(i) + " out of range");
    kept.push_back(edges_[i]);
  }
  return SignedBipartiteGraph(n_u_, n_v_, std::move(kept));
}

SignedBipartiteGraph SignedBipartiteGraph::negated() const {
  std::vector<SignedEdge> flipped(edges_.begin(), edges_.end());
  for (auto& e : flipped) e.sign = flip(e.sign);
  return SignedBipartiteGraph(n_u_, n_v_, std::move(flipped));
}

// ---------------------------------------------------------------------------
// Edge-list IO

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  auto is_sep = [](char c) { return c == '\t' || c == ' ' || c == ','; };
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !is_sep(line[j])) ++j;
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

struct RawEdge {
  std::string u, v;
  Sign sign;
  std::size_t line;
};

bool parse_integer(std::string_view s, long long& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Maps original identifiers to dense ids in sorted identifier order.
std::vector<std::string> densify(const std::vector<std::string>& ids, IdMode mode,
                                 std::unordered_map<std::string, Index>& index) {
  std::vector<std::string> names(ids);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  if (mode == IdMode::Numeric) {
    std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
      return std::stoll(a) < std::stoll(b);
    });
  }
  for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = static_cast<Index>(i);
  return names;
}

}  // namespace

LoadedGraph parse_edge_list(std::istream& in, IdMode mode) {
  std::vector<RawEdge> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view view(line);
    auto first = view.find_first_not_of(" \t");
    if (first == std::string_view::npos || view[first] == '#') continue;
    auto fields = split_fields(view);
    if (fields.size() != 3)
      throw GraphError("line " + std::to_string(line_no) + ": expected 3 fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    Sign sign;
    if (fields[2] == "1" || fields[2] == "+1")
      sign = Sign::Positive;
    else if (fields[2] == "-1")
      sign = Sign::Negative;
    else
      throw GraphError("line " + std::to_string(line_no) + ": sign must be 1 or -1, got '" +
                           std::string(fields[2]) + "'",
                       line_no);
    RawEdge e{std::string(fields[0]), std::string(fields[1]), sign, line_no};
    if (mode == IdMode::Numeric) {
      long long a = 0, b = 0;
      if (!parse_integer(fields[0], a) || !parse_integer(fields[1], b) || a < 0 || b < 0)
        throw GraphError("line " + std::to_string(line_no) +
                             ": numeric id mode requires non-negative integer ids",
                         line_no);
      e.u = std::to_string(a);
      e.v = std::to_string(b);
    }
    raw.push_back(std::move(e));
  }
  if (raw.empty()) throw GraphError("edge list is empty");

  std::vector<std::string> us, vs;
  us.reserve(raw.size());
  vs.reserve(raw.size());
  for (const auto& e : raw) {
    us.push_back(e.u);
    vs.push_back(e.v);
  }
  std::unordered_map<std::string, Index> u_index, v_index;
  LoadedGraph result;
  result.names.u = densify(us, mode, u_index);
  result.names.v = densify(vs, mode, v_index);

  // (u, v) -> (sign, first line) to detect conflicting duplicates.
  std::map<std::pair<Index, Index>, std::pair<Sign, std::size_t>> seen;
  std::vector<SignedEdge> edges;
  edges.reserve(raw.size());
  for (const auto& e : raw) {
    const Index u = u_index.at(e.u);
    const Index v = v_index.at(e.v);
    auto [it, inserted] = seen.try_emplace({u, v}, e.sign, e.line);
    if (!inserted) {
      if (it->second.first != e.sign)
        throw GraphError("line " + std::to_string(e.line) + ": edge (" + e.u + ", " + e.v +
                             ") conflicts with the sign given on line " +
                             std::to_string(it->second.second),
                         e.line);
      ++result.duplicates_collapsed;
      continue;
    }
    edges.push_back({u, v, e.sign});
  }
  result.graph = SignedBipartiteGraph(static_cast<Index>(result.names.u.size()),
                                      static_cast<Index>(result.names.v.size()), std::move(edges));
  return result;
}

LoadedGraph load_edge_list(const std::filesystem::path& path, IdMode mode) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open edge list '" + path.string() + "'");
  return parse_edge_list(in, mode);
}

void write_edge_list(std::ostream& out, const SignedBipartiteGraph& g, const NodeNames& names) {
  if (names.u.size() != g.n_u() || names.v.size() != g.n_v())
    throw GraphError("node name table does not match graph size");
  for (const auto& e : g.edges())
    out << names.u[e.u] << '\t' << names.v[e.v] << '\t' << sign_value(e.sign) << '\n';
}

void write_edge_list(std::ostream& out, const SignedBipartiteGraph& g) {
  for (const auto& e : g.edges()) out << e.u << '\t' << e.v << '\t' << sign_value(e.sign) << '\n';
}

// ---------------------------------------------------------------------------
// Statistics and splits

DatasetStats compute_stats(const SignedBipartiteGraph& g) {
  if (g.n_edges() == 0) throw GraphError("cannot compute statistics of an empty graph");
  DatasetStats s;
  s.n_u = g.n_u();
  s.n_v = g.n_v();
  s.n_edges = g.n_edges();
  s.n_positive = g.n_positive();
  s.n_negative = g.n_negative();
  s.pos_fraction = static_cast<double>(s.n_positive) / static_cast<double>(s.n_edges);
  s.neg_fraction = static_cast<double>(s.n_negative) / static_cast<double>(s.n_edges);
  return s;
}

void check_fractions(const SplitFractions& f) {
  for (double x : {f.train, f.validation, f.test})
    if (!(x > 0.0) || !std::isfinite(x))
      throw GraphError("split fractions must be positive");
  if (std::abs(f.train + f.validation + f.test - 1.0) > 1e-9)
    throw GraphError("split fractions must sum to 1");
}

EdgeSplit split_edges(const SignedBipartiteGraph& g, const SplitFractions& fractions,
                      std::uint64_t seed) {
  check_fractions(fractions);
  const std::size_t n = g.n_edges();
  if (n < 3) throw GraphError("at least 3 edges are required to split");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  // The epsilon keeps exact products such as 0.1 * 1170 from rounding down.
  auto take = [n](double f) {
    return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9));
  };
  const std::size_t n_val = take(fractions.validation);
  const std::size_t n_test = take(fractions.test);
  if (n_val + n_test >= n) throw GraphError("split leaves no training edges");

  EdgeSplit split;
  split.seed = seed;
  split.fractions = fractions;
  auto it = order.begin();
  split.validation.assign(it, it + static_cast<std::ptrdiff_t>(n_val));
  it += static_cast<std::ptrdiff_t>(n_val);
  split.test.assign(it, it + static_cast<std::ptrdiff_t>(n_test));
  it += static_cast<std::ptrdiff_t>(n_test);
  split.train.assign(it, order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

void validate_split(const SignedBipartiteGraph& g, const EdgeSplit& split) {
  std::vector<char> seen(g.n_edges(), 0);
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (std::size_t i : *part) {
      if (i >= g.n_edges())
        throw GraphError("split refers to edge " + std::to_string(i) + " but the graph has " +
                         std::to_string(g.n_edges()) + " edges");
      if (seen[i]) throw GraphError("edge " + std::to_string(i) + " appears twice in the split");
      seen[i] = 1;
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw GraphError("split does not cover every edge");
}

}  // namespace sbgnn
