#include "sbgnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sbgnn/balance.hpp"

namespace sbgnn::model {

namespace {

constexpr std::array<std::string_view, kRelations> kRelationNames{
    "v+u", "v-u", "u+u", "u-u", "u+v", "u-v", "v+v", "v-v"};

constexpr std::array<Relation, 4> kIntoU{Relation::VPosU, Relation::VNegU, Relation::UPosU,
                                         Relation::UNegU};
constexpr std::array<Relation, 4> kIntoV{Relation::UPosV, Relation::UNegV, Relation::VPosV,
                                         Relation::VNegV};

std::size_t rid(Relation r) { return static_cast<std::size_t>(r); }

Matrix uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

std::string layer_prefix(int layer) { return "layer" + std::to_string(layer) + "."; }

std::shared_ptr<const std::vector<Index>> alias(const std::shared_ptr<const Segments>& seg,
                                                const std::vector<Index> Segments::*member) {
  return std::shared_ptr<const std::vector<Index>>(seg, &((*seg).*member));
}

}  // namespace

std::string_view relation_name(Relation r) { return kRelationNames[rid(r)]; }

Side target_side(Relation r) { return rid(r) < 4 ? Side::U : Side::V; }

Side source_side(Relation r) {
  switch (r) {
    case Relation::VPosU:
    case Relation::VNegU:
    case Relation::VPosV:
    case Relation::VNegV: return Side::V;
    default: return Side::U;
  }
}

bool is_cross_set(Relation r) { return source_side(r) != target_side(r); }

std::string_view to_string(Aggregator a) { return a == Aggregator::Mean ? "mean" : "gat"; }
std::string_view to_string(Predictor p) { return p == Predictor::Product ? "product" : "mlp"; }

Aggregator parse_aggregator(std::string_view s) {
  if (s == "mean") return Aggregator::Mean;
  if (s == "gat") return Aggregator::Gat;
  throw std::invalid_argument("unknown aggregator '" + std::string(s) + "'");
}

Predictor parse_predictor(std::string_view s) {
  if (s == "product") return Predictor::Product;
  if (s == "mlp") return Predictor::Mlp;
  throw std::invalid_argument("unknown predictor '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Neighborhoods

NeighborhoodIndex build_neighborhoods(const SignedBipartiteGraph& g,
                                      std::span<const std::size_t> train_edges) {
  const SignedBipartiteGraph train = g.subgraph(train_edges);
  NeighborhoodIndex index;
  index.n_u = g.n_u();
  index.n_v = g.n_v();
  for (std::size_t r = 0; r < kRelations; ++r)
    index.lists[r].assign(target_side(static_cast<Relation>(r)) == Side::U ? g.n_u() : g.n_v(), {});

  for (Index u = 0; u < g.n_u(); ++u) {
    auto pos = train.neighbors({Side::U, u}, Sign::Positive);
    auto neg = train.neighbors({Side::U, u}, Sign::Negative);
    index.lists[rid(Relation::VPosU)][u].assign(pos.begin(), pos.end());
    index.lists[rid(Relation::VNegU)][u].assign(neg.begin(), neg.end());
  }
  for (Index v = 0; v < g.n_v(); ++v) {
    auto pos = train.neighbors({Side::V, v}, Sign::Positive);
    auto neg = train.neighbors({Side::V, v}, Sign::Negative);
    index.lists[rid(Relation::UPosV)][v].assign(pos.begin(), pos.end());
    index.lists[rid(Relation::UNegV)][v].assign(neg.begin(), neg.end());
  }

  auto add_projection = [&](Side side, Relation pos_rel, Relation neg_rel) {
    const auto p = balance::project_same_set(train, side);
    auto& pos = index.lists[rid(pos_rel)];
    auto& neg = index.lists[rid(neg_rel)];
    for (const auto& e : p.edges) {
      auto& lists = e.sign == Sign::Positive ? pos : neg;
      lists[e.i].push_back(e.j);
      lists[e.j].push_back(e.i);
    }
    for (auto& l : pos) std::sort(l.begin(), l.end());
    for (auto& l : neg) std::sort(l.begin(), l.end());
  };
  add_projection(Side::U, Relation::UPosU, Relation::UNegU);
  add_projection(Side::V, Relation::VPosV, Relation::VNegV);

  for (std::size_t r = 0; r < kRelations; ++r) {
    const Side src = source_side(static_cast<Relation>(r));
    index.segments[r] = Segments::build(index.lists[r], src == Side::U ? g.n_u() : g.n_v());
  }
  return index;
}

NeighborhoodIndex build_neighborhoods(const SignedBipartiteGraph& g, const EdgeSplit& split) {
  validate_split(g, split);
  return build_neighborhoods(g, split.train);
}

// ---------------------------------------------------------------------------
// Building blocks

Var message(const Var& w, const Var& h) { return diff::linear(h, w); }

Var aggregate_mean(Tape& tape, const std::vector<Var>& messages, int dim) {
  return diff::mean_rows(tape, messages, 1, dim);
}

GatOutput aggregate_gat(Tape& tape, const Var& w, const Var& a, const Var& h_i,
                        const std::vector<Var>& h_neighbors, double slope) {
  const Eigen::Index d = w.rows();
  if (h_neighbors.empty()) return {tape.constant(Matrix::Zero(1, d)), Var{}};
  const Var wh_i = message(w, h_i);
  std::vector<Var> logits, messages;
  for (const Var& h_j : h_neighbors) {
    const Var wh_j = message(w, h_j);
    messages.push_back(wh_j);
    logits.push_back(diff::leaky_relu(diff::matmul(diff::concat_cols({wh_i, wh_j}), a), slope));
  }
  const Var alpha = diff::softmax(diff::concat_rows(logits));
  return {diff::weighted_sum(alpha, messages), alpha};
}

Var aggregate_mean_table(const Var& messages, const std::shared_ptr<const Segments>& seg) {
  return diff::segment_mean(messages, seg);
}

Var aggregate_gat_table(const Var& w, const Var& a, const Var& h_target, const Var& h_source,
                        const std::shared_ptr<const Segments>& seg, double slope, Var* alpha_out) {
  const Eigen::Index d = w.rows();
  if (a.rows() != 2 * d || a.cols() != 1)
    throw diff::DiffError("attention vector must be (2d x 1)");
  // a^T [W h_i || W h_j] splits into a_target . W h_i + a_source . W h_j.
  const Var m_source = message(w, h_source);
  const Var m_target = message(w, h_target);
  const Var score_target = diff::matmul(m_target, diff::slice_rows(a, 0, d));
  const Var score_source = diff::matmul(m_source, diff::slice_rows(a, d, d));
  const Var logits = diff::leaky_relu(
      diff::add(diff::gather_rows(score_target, alias(seg, &Segments::segment)),
                diff::gather_rows(score_source, alias(seg, &Segments::source))),
      slope);
  const Var alpha = diff::segment_softmax(logits, seg);
  if (alpha_out) *alpha_out = alpha;
  return diff::segment_weighted_sum(alpha, m_source, seg);
}

Var mlp_forward(const MlpVars& mlp, const Var& x, double dropout, bool training, Rng& rng) {
  const Var hidden = diff::add(diff::linear(x, mlp.w1), mlp.b1);
  const Var act = diff::prelu(diff::dropout(hidden, dropout, training, rng), mlp.slope);
  return diff::add(diff::linear(act, mlp.w2), mlp.b2);
}

Var predict_product(const Var& z_u, const Var& z_v) {
  if (z_u.cols() != z_v.cols())
    throw diff::DiffError("product predictor needs equal embedding widths");
  return diff::sigmoid(diff::row_dot(z_u, z_v));
}

std::array<double, 2> class_weights(std::span<const double> labels) {
  std::array<std::size_t, 2> counts{0, 0};
  for (double y : labels) ++counts[y > 0.5 ? 1 : 0];
  const auto n = static_cast<double>(labels.size());
  std::array<double, 2> w{};
  for (int c = 0; c < 2; ++c) w[c] = counts[c] == 0 ? 0.0 : n / (2.0 * static_cast<double>(counts[c]));
  return w;
}

// ---------------------------------------------------------------------------
// Model

SbgnnModel::SbgnnModel(const ModelConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
  if (config.dim < 1) throw std::invalid_argument("embedding dimension must be positive");
  if (config.layers < 0) throw std::invalid_argument("layer count must be non-negative");
  if (config.n_u == 0 || config.n_v == 0) throw std::invalid_argument("model needs nodes on both sides");
  if (!(config.dropout >= 0.0 && config.dropout < 1.0))
    throw std::invalid_argument("dropout must lie in [0, 1)");

  Rng rng(seed);
  const Eigen::Index d = config.dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  auto add_mlp = [&](const std::string& prefix, Eigen::Index in, Eigen::Index out) {
    params_.add(prefix + "W1", uniform(rng, d, in, bound));
    params_.add(prefix + "b1", Matrix::Zero(1, d));
    params_.add(prefix + "W2", uniform(rng, out, d, bound));
    params_.add(prefix + "b2", Matrix::Zero(1, out));
    params_.add(prefix + "prelu", Matrix::Constant(1, 1, config.init_prelu));
  };

  params_.add("embed.u", uniform(rng, config.n_u, d, bound));
  params_.add("embed.v", uniform(rng, config.n_v, d, bound));
  for (int l = 0; l < config.layers; ++l) {
    const std::string p = layer_prefix(l);
    for (std::size_t r = 0; r < kRelations; ++r) {
      const std::string rel(relation_name(static_cast<Relation>(r)));
      params_.add(p + "W." + rel, uniform(rng, d, d, bound));
      if (config.aggregator == Aggregator::Gat) params_.add(p + "a." + rel, uniform(rng, 2 * d, 1, bound));
    }
    add_mlp(p + "mlp_u.", 5 * d, d);
    add_mlp(p + "mlp_v.", 5 * d, d);
  }
  if (config.predictor == Predictor::Mlp) add_mlp("predictor.", 2 * d, 1);
}

// The tape writes gradients into the parameters it references; values are
// never modified during a forward pass.
diff::Parameter& SbgnnModel::use(const std::string& name) const {
  return const_cast<ParameterStore&>(params_).get(name);
}

void SbgnnModel::check_index(const NeighborhoodIndex& index) const {
  if (index.n_u != config_.n_u || index.n_v != config_.n_v)
    throw std::invalid_argument("neighborhood index does not match the model's graph size");
}

SbgnnModel::Tables SbgnnModel::layer_forward(Tape& tape, int layer, const NeighborhoodIndex& index,
                                             const Tables& h, bool training, Rng& rng) const {
  check_index(index);
  if (layer < 0 || layer >= config_.layers) throw std::out_of_range("layer index out of range");
  const std::string p = layer_prefix(layer);
  const Eigen::Index d = config_.dim;

  auto relation_message = [&](Relation r) -> Var {
    const bool enabled = is_cross_set(r) ? config_.use_set1 : config_.use_set2;
    const Var& target = target_side(r) == Side::U ? h.u : h.v;
    if (!enabled) return tape.constant(Matrix::Zero(target.rows(), d));
    const Var& source = source_side(r) == Side::U ? h.u : h.v;
    const std::string rel(relation_name(r));
    const Var w = tape.param(use(p + "W." + rel));
    if (config_.aggregator == Aggregator::Mean)
      return aggregate_mean_table(message(w, source), index.segment(r));
    const Var a = tape.param(use(p + "a." + rel));
    return aggregate_gat_table(w, a, target, source, index.segment(r), config_.attention_slope);
  };

  auto update = [&](const Var& self, const std::array<Relation, 4>& rels, const std::string& mlp) {
    std::vector<Var> parts{self};
    for (Relation r : rels) parts.push_back(relation_message(r));
    const MlpVars vars{tape.param(use(p + mlp + "W1")), tape.param(use(p + mlp + "b1")),
                       tape.param(use(p + mlp + "W2")), tape.param(use(p + mlp + "b2")),
                       tape.param(use(p + mlp + "prelu"))};
    return mlp_forward(vars, diff::concat_cols(parts), config_.dropout, training, rng);
  };

  Tables out;
  out.u = update(h.u, kIntoU, "mlp_u.");
  out.v = update(h.v, kIntoV, "mlp_v.");
  return out;
}

SbgnnModel::Tables SbgnnModel::forward(Tape& tape, const NeighborhoodIndex& index, bool training,
                                       Rng& rng) const {
  check_index(index);
  Tables h{tape.param(use("embed.u")), tape.param(use("embed.v"))};
  for (int l = 0; l < config_.layers; ++l) h = layer_forward(tape, l, index, h, training, rng);
  return h;
}

Var SbgnnModel::predict(Tape& tape, const Tables& z, std::shared_ptr<const std::vector<Index>> u_rows,
                        std::shared_ptr<const std::vector<Index>> v_rows, bool training, Rng& rng) const {
  if (u_rows->size() != v_rows->size()) throw std::invalid_argument("edge endpoint lists differ in length");
  const Var zu = diff::gather_rows(z.u, std::move(u_rows));
  const Var zv = diff::gather_rows(z.v, std::move(v_rows));
  if (config_.predictor == Predictor::Product) return predict_product(zu, zv);
  const MlpVars vars{tape.param(use("predictor.W1")), tape.param(use("predictor.b1")),
                     tape.param(use("predictor.W2")), tape.param(use("predictor.b2")),
                     tape.param(use("predictor.prelu"))};
  // No dropout in the edge predictor.
  return diff::sigmoid(mlp_forward(vars, diff::concat_cols({zu, zv}), 0.0, training, rng));
}

std::vector<double> SbgnnModel::score_edges(const NeighborhoodIndex& index, const SignedBipartiteGraph& g,
                                            std::span<const std::size_t> edges) const {
  auto us = std::make_shared<std::vector<Index>>();
  auto vs = std::make_shared<std::vector<Index>>();
  for (std::size_t i : edges) {
    us->push_back(g.edge(i).u);
    vs->push_back(g.edge(i).v);
  }
  Tape tape;
  Rng unused(0);
  const Tables z = forward(tape, index, false, unused);
  const Var probs = predict(tape, z, us, vs, false, unused);
  const Matrix& pv = probs.value();
  return std::vector<double>(pv.data(), pv.data() + pv.size());
}

Var link_sign_loss(Tape& tape, const SbgnnModel& model, const SbgnnModel::Tables& z,
                   const SignedBipartiteGraph& g, std::span<const std::size_t> edges, bool training,
                   Rng& rng) {
  if (edges.empty()) throw std::invalid_argument("loss needs at least one edge");
  auto us = std::make_shared<std::vector<Index>>();
  auto vs = std::make_shared<std::vector<Index>>();
  auto labels = std::make_shared<std::vector<double>>();
  for (std::size_t i : edges) {
    const auto& e = g.edge(i);
    us->push_back(e.u);
    vs->push_back(e.v);
    labels->push_back(e.sign == Sign::Positive ? 1.0 : 0.0);
  }
  const auto w = class_weights(*labels);
  auto weights = std::make_shared<std::vector<double>>();
  for (double y : *labels) weights->push_back(w[y > 0.5 ? 1 : 0]);
  const Var probs = model.predict(tape, z, us, vs, training, rng);
  return diff::weighted_bce_mean(probs, labels, weights);
}

}  // namespace sbgnn::model
