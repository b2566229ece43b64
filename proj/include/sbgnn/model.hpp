#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sbgnn/diff.hpp"
#include "sbgnn/graph.hpp"

namespace sbgnn::model {

using diff::Matrix;
using diff::ParameterStore;
using diff::Rng;
using diff::Segments;
using diff::Tape;
using diff::Var;

/// The 8 message relations. The first four feed U nodes, the last four feed
/// V nodes; within each half the order is the concatenation order of the
/// update step (opposite side +, opposite side -, same side +, same side -).
enum class Relation : std::uint8_t {
  VPosU,  // v ->+ u
  VNegU,  // v ->- u
  UPosU,  // u ->+ u
  UNegU,  // u ->- u
  UPosV,  // u ->+ v
  UNegV,  // u ->- v
  VPosV,  // v ->+ v
  VNegV,  // v ->- v
};
inline constexpr std::size_t kRelations = 8;

std::string_view relation_name(Relation r);
/// Side of the node receiving the message.
Side target_side(Relation r);
/// Side of the node sending the message.
Side source_side(Relation r);
/// True for relations between opposite sides (direct edges).
bool is_cross_set(Relation r);

/**
 * Per-node neighbor lists for all 8 relations. Cross-set lists come from the
 * training edges; same-set lists come from majority sign construction over
 * the training edges. Lists are sorted.
 */
struct NeighborhoodIndex {
  Index n_u = 0;
  Index n_v = 0;
  std::array<std::vector<std::vector<Index>>, kRelations> lists;
  std::array<std::shared_ptr<const Segments>, kRelations> segments;

  const std::vector<Index>& neighbors(Relation r, Index node) const {
    return lists[static_cast<std::size_t>(r)][node];
  }
  const std::shared_ptr<const Segments>& segment(Relation r) const {
    return segments[static_cast<std::size_t>(r)];
  }
};

NeighborhoodIndex build_neighborhoods(const SignedBipartiteGraph& g,
                                      std::span<const std::size_t> train_edges);
NeighborhoodIndex build_neighborhoods(const SignedBipartiteGraph& g, const EdgeSplit& split);

enum class Aggregator { Mean, Gat };
enum class Predictor { Product, Mlp };

std::string_view to_string(Aggregator a);
std::string_view to_string(Predictor p);
Aggregator parse_aggregator(std::string_view s);
Predictor parse_predictor(std::string_view s);

struct ModelConfig {
  Index n_u = 0;
  Index n_v = 0;
  int dim = 32;
  int layers = 1;
  Aggregator aggregator = Aggregator::Mean;
  Predictor predictor = Predictor::Product;
  double dropout = 0.5;
  bool use_set1 = true;
  bool use_set2 = true;
  double attention_slope = 0.2;
  double init_prelu = 0.25;
};

// ---------------------------------------------------------------------------
// Building blocks, usable on single nodes as well as whole tables.

/// W * h for every row h of `h`.
Var message(const Var& w, const Var& h);

/// Elementwise mean of (1 x d) messages; zeros when there are none.
Var aggregate_mean(Tape& tape, const std::vector<Var>& messages, int dim);

struct GatOutput {
  Var output;  // (1 x d)
  Var alpha;   // (k x 1), empty Var when k == 0
};

/**
 * Attention aggregation for one target node: logits
 * LeakyReLU(a^T [W h_i || W h_j]), softmax over the neighbors, then the
 * alpha-weighted sum of W h_j. Zero output when there are no neighbors.
 */
GatOutput aggregate_gat(Tape& tape, const Var& w, const Var& a, const Var& h_i,
                        const std::vector<Var>& h_neighbors, double slope = 0.2);

/// Whole-table mean aggregation of precomputed messages (source rows).
Var aggregate_mean_table(const Var& messages, const std::shared_ptr<const Segments>& seg);

/// Whole-table attention aggregation. Returns the (targets x d) messages;
/// `alpha_out`, when given, receives the (entries x 1) coefficients.
Var aggregate_gat_table(const Var& w, const Var& a, const Var& h_target, const Var& h_source,
                        const std::shared_ptr<const Segments>& seg, double slope,
                        Var* alpha_out = nullptr);

/// Two-layer update network: W2 * PReLU(Dropout(W1 x + b1)) + b2.
struct MlpVars {
  Var w1, b1, w2, b2, slope;
};
Var mlp_forward(const MlpVars& mlp, const Var& x, double dropout, bool training, Rng& rng);

/**
 * Signed bipartite GNN: learnable lookup embeddings refined by `layers`
 * message-passing layers, with a product or MLP edge predictor.
 *
 * Parameter names: `embed.u`, `embed.v`, `layer{l}.W.{rel}`,
 * `layer{l}.a.{rel}` (attention only), `layer{l}.mlp_{u,v}.{W1,b1,W2,b2,prelu}`,
 * `predictor.{W1,b1,W2,b2,prelu}` (MLP predictor only).
 */
class SbgnnModel {
 public:
  SbgnnModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  struct Tables {
    Var u;
    Var v;
  };

  /// One message-passing layer over full node tables.
  Tables layer_forward(Tape& tape, int layer, const NeighborhoodIndex& index, const Tables& h,
                       bool training, Rng& rng) const;

  /// Lookup embeddings followed by all layers.
  Tables forward(Tape& tape, const NeighborhoodIndex& index, bool training, Rng& rng) const;

  /// Probabilities (n x 1) that edges (u_rows[i], v_rows[i]) are positive.
  Var predict(Tape& tape, const Tables& z, std::shared_ptr<const std::vector<Index>> u_rows,
              std::shared_ptr<const std::vector<Index>> v_rows, bool training, Rng& rng) const;

  /// Evaluation-mode scores for the listed edges of g.
  std::vector<double> score_edges(const NeighborhoodIndex& index, const SignedBipartiteGraph& g,
                                  std::span<const std::size_t> edges) const;

 private:
  void check_index(const NeighborhoodIndex& index) const;
  diff::Parameter& use(const std::string& name) const;

  ModelConfig config_;
  std::uint64_t seed_;
  ParameterStore params_;
};

/// sigmoid(z_u . z_v) for single (1 x d) embeddings.
Var predict_product(const Var& z_u, const Var& z_v);

/// Inverse-frequency class weights N / (2 N_c) for labels in {0, 1}.
/// Returns {w_negative, w_positive}; a class with no members gets weight 0.
std::array<double, 2> class_weights(std::span<const double> labels);

/// Training loss on the given edges: class-weighted mean BCE.
Var link_sign_loss(Tape& tape, const SbgnnModel& model, const SbgnnModel::Tables& z,
                   const SignedBipartiteGraph& g, std::span<const std::size_t> edges, bool training,
                   Rng& rng);

}  // namespace sbgnn::model
