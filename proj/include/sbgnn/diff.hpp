#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace sbgnn::diff {

/// Dense row-major matrix. Node tables are (nodes x features); column
/// vectors are (n x 1).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = std::uint32_t;
using Rng = std::mt19937_64;

class DiffError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

/// Owns named parameters with stable addresses, in insertion order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Matrix init);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t n_values() const;
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();
  /// Deep copy of all values (used for best-snapshot selection).
  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

/// Flat checkpoint container: {"name": {"shape": [r, c], "values": [...]}}.
nlohmann::json to_json(const ParameterStore& store);
/// Loads values into an existing store; names and shapes must match exactly.
void load_json(ParameterStore& store, const nlohmann::json& j);

/**
 * Grouping of entries into segments, e.g. neighbor lists: entry e belongs to
 * segment `segment[e]` and reads row `source[e]` of a source table. Also
 * indexes entries by source row so scatter-style gradients can be computed
 * one output row at a time.
 */
struct Segments {
  Index n_sources = 0;
  std::vector<std::size_t> offsets;
  std::vector<Index> source;
  std::vector<Index> segment;
  std::vector<std::size_t> by_source_offsets;
  std::vector<std::size_t> by_source;

  std::size_t n_segments() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t n_entries() const { return source.size(); }

  static std::shared_ptr<const Segments> build(const std::vector<std::vector<Index>>& lists,
                                               Index n_sources);
};

class Tape;

/// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/**
 * Records operations in execution order. `backward` replays them in reverse
 * and accumulates into Parameter::grad. Parameter values are referenced,
 * never copied or modified by the tape.
 */
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& p);

  /// d loss / d parameter for every parameter reachable from `loss`.
  void backward(const Var& loss);

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  // Used by op implementations.
  Var record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward);
  const Matrix& value(std::size_t id) const;
  Matrix& grad(std::size_t id);
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

 private:
  friend class Var;
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    Parameter* param = nullptr;
    Matrix grad;
    bool needs_grad = false;
    BackwardFn backward;
  };
  std::deque<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Operations. Each checks shapes and finiteness and throws DiffError.

Var matmul(const Var& a, const Var& b);
/// x * w^T: applies w (out x in) to every row of x.
Var linear(const Var& x, const Var& w);
/// Elementwise sum; `b` may also be a single row added to every row of `a`.
Var add(const Var& a, const Var& b);
Var sum(const Var& x);
/// Stacks row blocks vertically.
Var concat_rows(const std::vector<Var>& parts);
/// Joins feature blocks horizontally.
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(const Var& x, Eigen::Index begin, Eigen::Index count);
Var gather_rows(const Var& x, std::shared_ptr<const std::vector<Index>> rows);
/// Per-row dot product of two equally shaped tables, as an (n x 1) column.
Var row_dot(const Var& a, const Var& b);

/// Mean of the source rows in each segment; empty segments give zeros.
Var segment_mean(const Var& x, std::shared_ptr<const Segments> seg);
/// Per segment, sum over entries e of weights[e] * x[source[e]].
Var segment_weighted_sum(const Var& weights, const Var& x, std::shared_ptr<const Segments> seg);
/// Softmax of an (entries x 1) column within each segment.
Var segment_softmax(const Var& logits, std::shared_ptr<const Segments> seg);
/// Softmax over all entries of a column vector.
Var softmax(const Var& x);
/// Elementwise mean of equally shaped inputs; zeros of (rows x cols) when empty.
Var mean_rows(Tape& tape, const std::vector<Var>& parts, Eigen::Index rows, Eigen::Index cols);
/// Sum over i of weights[i] * parts[i]; weights is a (k x 1) column.
Var weighted_sum(const Var& weights, const std::vector<Var>& parts);

Var leaky_relu(const Var& x, double slope);
/// Parametric ReLU with a learnable (1 x 1) slope.
Var prelu(const Var& x, const Var& slope);
Var sigmoid(const Var& x);
/// Inverted dropout. Identity when not training or p == 0.
Var dropout(const Var& x, double p, bool training, Rng& rng);

/// Mean over rows of -w[y log p + (1-y) log(1-p)] with p clamped to
/// [eps, 1-eps]. `probs` is (n x 1).
Var weighted_bce_mean(const Var& probs, std::shared_ptr<const std::vector<double>> labels,
                      std::shared_ptr<const std::vector<double>> weights, double eps = 1e-7);

// ---------------------------------------------------------------------------
// Finite-difference checking

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

using ScalarFunction = std::function<Var(Tape&)>;

/**
 * Compares backward() against central differences for every coordinate of
 * `params`. Relative error uses max(|analytic|, |numeric|, 1e-6) as the
 * denominator. Throws DiffError if f is not deterministic.
 */
GradientCheckResult gradient_check(const ScalarFunction& f, std::vector<Parameter*> params,
                                   double step = 1e-5);
GradientCheckResult gradient_check(const ScalarFunction& f, ParameterStore& store,
                                   double step = 1e-5);

}  // namespace sbgnn::diff
