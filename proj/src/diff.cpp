#include "sbgnn/diff.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

namespace sbgnn::diff {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DiffError(what);
}

std::string shape(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

void require_finite(const Matrix& m, const char* op) {
  require(m.allFinite(), std::string(op) + ": non-finite value");
}

Tape& same_tape(std::initializer_list<const Var*> vars) {
  Tape* t = nullptr;
  for (const Var* v : vars) {
    require(v->tape() != nullptr, "operation on an empty Var");
    require(t == nullptr || t == v->tape(), "operands live on different tapes");
    t = v->tape();
  }
  return *t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

Parameter& ParameterStore::add(const std::string& name, Matrix init) {
  require(!contains(name), "duplicate parameter name '" + name + "'");
  require_finite(init, "parameter init");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->grad = Matrix::Zero(init.rows(), init.cols());
  p->value = std::move(init);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return *p;
  throw DiffError("unknown parameter '" + name + "'");
}

const Parameter& ParameterStore::get(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return *p;
  throw DiffError("unknown parameter '" + name + "'");
}

bool ParameterStore::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(), [&](const auto& p) { return p->name == name; });
}

std::size_t ParameterStore::n_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

std::vector<Matrix> ParameterStore::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParameterStore::restore(const std::vector<Matrix>& values) {
  require(values.size() == params_.size(), "snapshot size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(values[i].rows() == params_[i]->value.rows() && values[i].cols() == params_[i]->value.cols(),
            "snapshot shape mismatch for '" + params_[i]->name + "'");
    params_[i]->value = values[i];
  }
}

nlohmann::json to_json(const ParameterStore& store) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store[i];
    std::vector<double> values(p.value.data(), p.value.data() + p.value.size());
    j[p.name] = {{"shape", {p.value.rows(), p.value.cols()}}, {"values", std::move(values)}};
  }
  return j;
}

void load_json(ParameterStore& store, const nlohmann::json& j) {
  require(j.is_object(), "parameter container must be a JSON object");
  require(j.size() == store.size(), "parameter container has " + std::to_string(j.size()) +
                                        " entries, expected " + std::to_string(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    require(j.contains(p.name), "parameter '" + p.name + "' missing from container");
    const auto& entry = j.at(p.name);
    const auto rows = entry.at("shape").at(0).get<Eigen::Index>();
    const auto cols = entry.at("shape").at(1).get<Eigen::Index>();
    require(rows == p.value.rows() && cols == p.value.cols(),
            "parameter '" + p.name + "' has shape (" + std::to_string(rows) + "x" +
                std::to_string(cols) + "), expected " + shape(p.value));
    const auto values = entry.at("values").get<std::vector<double>>();
    require(static_cast<Eigen::Index>(values.size()) == rows * cols,
            "parameter '" + p.name + "' has the wrong number of values");
    std::copy(values.begin(), values.end(), p.value.data());
    require_finite(p.value, "checkpoint");
  }
}

// ---------------------------------------------------------------------------
// Segments

std::shared_ptr<const Segments> Segments::build(const std::vector<std::vector<Index>>& lists,
                                                Index n_sources) {
  auto seg = std::make_shared<Segments>();
  seg->n_sources = n_sources;
  seg->offsets.assign(lists.size() + 1, 0);
  for (std::size_t s = 0; s < lists.size(); ++s) seg->offsets[s + 1] = seg->offsets[s] + lists[s].size();
  seg->source.reserve(seg->offsets.back());
  seg->segment.reserve(seg->offsets.back());
  for (std::size_t s = 0; s < lists.size(); ++s) {
    for (Index src : lists[s]) {
      require(src < n_sources, "segment source index out of range");
      seg->source.push_back(src);
      seg->segment.push_back(static_cast<Index>(s));
    }
  }
  seg->by_source_offsets.assign(static_cast<std::size_t>(n_sources) + 1, 0);
  for (Index src : seg->source) ++seg->by_source_offsets[src + 1];
  for (std::size_t i = 0; i < n_sources; ++i) seg->by_source_offsets[i + 1] += seg->by_source_offsets[i];
  seg->by_source.resize(seg->source.size());
  std::vector<std::size_t> cursor(seg->by_source_offsets.begin(), seg->by_source_offsets.end() - 1);
  for (std::size_t e = 0; e < seg->source.size(); ++e) seg->by_source[cursor[seg->source[e]]++] = e;
  return seg;
}

// ---------------------------------------------------------------------------
// Tape

const Matrix& Var::value() const {
  require(tape_ != nullptr, "empty Var");
  return tape_->value(id_);
}

const Matrix& Var::grad() const {
  require(tape_ != nullptr, "empty Var");
  return tape_->grad(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  require(v.size() == 1, "scalar() on a non-scalar " + shape(v));
  return v(0, 0);
}

bool Var::requires_grad() const { return tape_ != nullptr && tape_->needs_grad(id_); }

Var Tape::constant(Matrix value) {
  require_finite(value, "constant");
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  require_finite(p.value, "parameter");
  Node n;
  n.ref = &p.value;
  n.param = &p;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = std::any_of(inputs.begin(), inputs.end(),
                             [this](std::size_t i) { return nodes_[i].needs_grad; });
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Matrix& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.ref ? *n.ref : n.value;
}

Matrix& Tape::grad(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.size() == 0) {
    const Matrix& v = value(id);
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::backward(const Var& loss) {
  require(loss.tape() == this, "loss is not on this tape");
  const Matrix& lv = value(loss.id());
  require(lv.size() == 1, "backward needs a scalar loss, got " + shape(lv));
  require(nodes_[loss.id()].needs_grad, "loss does not depend on any parameter");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  grad(loss.id())(0, 0) = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param) {
      require_finite(n.grad, "backward");
      n.param->grad += n.grad;
    }
  }
}

// ---------------------------------------------------------------------------
// Linear algebra

Var matmul(const Var& a, const Var& b) {
  Tape& t = same_tape({&a, &b});
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require(av.cols() == bv.rows(), "matmul: shape mismatch " + shape(av) + " * " + shape(bv));
  Matrix out = av * bv;
  require_finite(out, "matmul");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(ia)) tp.grad(ia).noalias() += g * tp.value(ib).transpose();
    if (tp.needs_grad(ib)) tp.grad(ib).noalias() += tp.value(ia).transpose() * g;
  });
}

Var linear(const Var& x, const Var& w) {
  Tape& t = same_tape({&x, &w});
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  require(xv.cols() == wv.cols(), "linear: input width " + std::to_string(xv.cols()) +
                                      " does not match weight " + shape(wv));
  Matrix out = xv * wv.transpose();
  require_finite(out, "linear");
  const std::size_t ix = x.id(), iw = w.id();
  return t.record(std::move(out), {ix, iw}, [ix, iw](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(ix)) tp.grad(ix).noalias() += g * tp.value(iw);
    if (tp.needs_grad(iw)) tp.grad(iw).noalias() += g.transpose() * tp.value(ix);
  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = same_tape({&a, &b});
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const bool same = av.rows() == bv.rows() && av.cols() == bv.cols();
  const bool row_broadcast = bv.rows() == 1 && av.cols() == bv.cols();
  require(same || row_broadcast, "add: shape mismatch " + shape(av) + " + " + shape(bv));
  Matrix out = av;
  if (same)
    out += bv;
  else
    out.rowwise() += bv.row(0);
  require_finite(out, "add");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib, same](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(ia)) tp.grad(ia) += g;
    if (tp.needs_grad(ib)) {
      if (same)
        tp.grad(ib) += g;
      else
        tp.grad(ib) += g.colwise().sum();
    }
  });
}

Var sum(const Var& x) {
  Tape& t = same_tape({&x});
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  require_finite(out, "sum");
  const std::size_t ix = x.id();
  return t.record(std::move(out), {ix}, [ix](Tape& tp, std::size_t self) {
    tp.grad(ix).array() += tp.grad(self)(0, 0);
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  Tape& t = *parts.front().tape();
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) {
    require(p.tape() == &t, "concat_rows: operands on different tapes");
    require(p.cols() == cols, "concat_rows: width mismatch");
    rows += p.rows();
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return t.record(std::move(out), ids, [ids](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    Eigen::Index r0 = 0;
    for (std::size_t id : ids) {
      const Eigen::Index n = tp.value(id).rows();
      if (tp.needs_grad(id)) tp.grad(id) += g.middleRows(r0, n);
      r0 += n;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  Tape& t = *parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) {
    require(p.tape() == &t, "concat_cols: operands on different tapes");
    require(p.rows() == rows, "concat_cols: row count mismatch " + shape(p.value()));
    cols += p.cols();
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return t.record(std::move(out), ids, [ids](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    Eigen::Index c0 = 0;
    for (std::size_t id : ids) {
      const Eigen::Index n = tp.value(id).cols();
      if (tp.needs_grad(id)) tp.grad(id) += g.middleCols(c0, n);
      c0 += n;
    }
  });
}

Var slice_rows(const Var& x, Eigen::Index begin, Eigen::Index count) {
  Tape& t = same_tape({&x});
  require(begin >= 0 && count >= 0 && begin + count <= x.rows(), "slice_rows: range out of bounds");
  Matrix out = x.value().middleRows(begin, count);
  const std::size_t ix = x.id();
  return t.record(std::move(out), {ix}, [ix, begin, count](Tape& tp, std::size_t self) {
    tp.grad(ix).middleRows(begin, count) += tp.grad(self);
  });
}

Var gather_rows(const Var& x, std::shared_ptr<const std::vector<Index>> rows) {
  Tape& t = same_tape({&x});
  const Matrix& xv = x.value();
  const auto n = static_cast<Eigen::Index>(rows->size());
  Matrix out(n, xv.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Index r = (*rows)[static_cast<std::size_t>(i)];
    require(r < xv.rows(), "gather_rows: index out of range");
    out.row(i) = xv.row(r);
  }
  const std::size_t ix = x.id();
  return t.record(std::move(out), {ix}, [ix, rows](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    Matrix& gx = tp.grad(ix);
    for (std::size_t i = 0; i < rows->size(); ++i)
      gx.row((*rows)[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var row_dot(const Var& a, const Var& b) {
  Tape& t = same_tape({&a, &b});
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require(av.rows() == bv.rows() && av.cols() == bv.cols(),
          "row_dot: shape mismatch " + shape(av) + " . " + shape(bv));
  Matrix out = av.cwiseProduct(bv).rowwise().sum();
  require_finite(out, "row_dot");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(ia)) tp.grad(ia) += (tp.value(ib).array().colwise() * g.col(0).array()).matrix();
    if (tp.needs_grad(ib)) tp.grad(ib) += (tp.value(ia).array().colwise() * g.col(0).array()).matrix();
  });
}

// ---------------------------------------------------------------------------
// Segment reductions

Var segment_mean(const Var& x, std::shared_ptr<const Segments> seg) {
  Tape& t = same_tape({&x});
  const Matrix& xv = x.value();
  require(xv.rows() == seg->n_sources, "segment_mean: source table has " + std::to_string(xv.rows()) +
                                           " rows, segments expect " + std::to_string(seg->n_sources));
  const auto n_seg = static_cast<std::int64_t>(seg->n_segments());
  Matrix out = Matrix::Zero(n_seg, xv.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < n_seg; ++s) {
    const std::size_t b = seg->offsets[s], e = seg->offsets[s + 1];
    if (b == e) continue;
    for (std::size_t k = b; k < e; ++k) out.row(s) += xv.row(seg->source[k]);
    out.row(s) /= static_cast<double>(e - b);
  }
  const std::size_t ix = x.id();
  return t.record(std::move(out), {ix}, [ix, seg](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    Matrix& gx = tp.grad(ix);
    const auto n_src = static_cast<std::int64_t>(seg->n_sources);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n_src; ++r) {
      for (std::size_t k = seg->by_source_offsets[r]; k < seg->by_source_offsets[r + 1]; ++k) {
        const std::size_t e = seg->by_source[k];
        const Index s = seg->segment[e];
        const double inv = 1.0 / static_cast<double>(seg->offsets[s + 1] - seg->offsets[s]);
        gx.row(r) += inv * g.row(s);
      }
    }
  });
}

Var segment_weighted_sum(const Var& weights, const Var& x, std::shared_ptr<const Segments> seg) {
  Tape& t = same_tape({&weights, &x});
  const Matrix& wv = weights.value();
  const Matrix& xv = x.value();
  require(wv.cols() == 1 && static_cast<std::size_t>(wv.rows()) == seg->n_entries(),
          "segment_weighted_sum: weights must be (entries x 1), got " + shape(wv));
  require(xv.rows() == seg->n_sources, "segment_weighted_sum: source row count mismatch");
  const auto n_seg = static_cast<std::int64_t>(seg->n_segments());
  Matrix out = Matrix::Zero(n_seg, xv.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < n_seg; ++s)
    for (std::size_t k = seg->offsets[s]; k < seg->offsets[s + 1]; ++k)
      out.row(s) += wv(static_cast<Eigen::Index>(k), 0) * xv.row(seg->source[k]);
  require_finite(out, "segment_weighted_sum");
  const std::size_t iw = weights.id(), ix = x.id();
  return t.record(std::move(out), {iw, ix}, [iw, ix, seg](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    const Matrix& wv2 = tp.value(iw);
    const Matrix& xv2 = tp.value(ix);
    if (tp.needs_grad(iw)) {
      Matrix& gw = tp.grad(iw);
      const auto n_e = static_cast<std::int64_t>(seg->n_entries());
#pragma omp parallel for schedule(static)
      for (std::int64_t k = 0; k < n_e; ++k)
        gw(k, 0) += g.row(seg->segment[k]).dot(xv2.row(seg->source[k]));
    }
    if (tp.needs_grad(ix)) {
      Matrix& gx = tp.grad(ix);
      const auto n_src = static_cast<std::int64_t>(seg->n_sources);
#pragma omp parallel for schedule(static)
      for (std::int64_t r = 0; r < n_src; ++r) {
        for (std::size_t k = seg->by_source_offsets[r]; k < seg->by_source_offsets[r + 1]; ++k) {
          const std::size_t e = seg->by_source[k];
          gx.row(r) += wv2(static_cast<Eigen::Index>(e), 0) * g.row(seg->segment[e]);
        }
      }
    }
  });
}

Var segment_softmax(const Var& logits, std::shared_ptr<const Segments> seg) {
  Tape& t = same_tape({&logits});
  const Matrix& lv = logits.value();
  require(lv.cols() == 1 && static_cast<std::size_t>(lv.rows()) == seg->n_entries(),
          "segment_softmax: logits must be (entries x 1), got " + shape(lv));
  Matrix out(lv.rows(), 1);
  const auto n_seg = static_cast<std::int64_t>(seg->n_segments());
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < n_seg; ++s) {
    const auto b = static_cast<Eigen::Index>(seg->offsets[s]);
    const auto e = static_cast<Eigen::Index>(seg->offsets[s + 1]);
    if (b == e) continue;
    const double m = lv.col(0).segment(b, e - b).maxCoeff();
    double z = 0.0;
    for (Eigen::Index k = b; k < e; ++k) z += (out(k, 0) = std::exp(lv(k, 0) - m));
    for (Eigen::Index k = b; k < e; ++k) out(k, 0) /= z;
  }
  require_finite(out, "segment_softmax");
  const std::size_t il = logits.id();
  return t.record(std::move(out), {il}, [il, seg](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    const Matrix& y = tp.value(self);
    Matrix& gl = tp.grad(il);
    const auto n = static_cast<std::int64_t>(seg->n_segments());
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < n; ++s) {
      const auto b = static_cast<Eigen::Index>(seg->offsets[s]);
      const auto e = static_cast<Eigen::Index>(seg->offsets[s + 1]);
      double dot = 0.0;
      for (Eigen::Index k = b; k < e; ++k) dot += g(k, 0) * y(k, 0);
      for (Eigen::Index k = b; k < e; ++k) gl(k, 0) += y(k, 0) * (g(k, 0) - dot);
    }
  });
}

Var softmax(const Var& x) {
  require(x.cols() == 1, "softmax expects a column vector");
  std::vector<std::vector<Index>> one(1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) one[0].push_back(static_cast<Index>(i));
  return segment_softmax(x, Segments::build(one, static_cast<Index>(x.rows())));
}

Var mean_rows(Tape& tape, const std::vector<Var>& parts, Eigen::Index rows, Eigen::Index cols) {
  if (parts.empty()) return tape.constant(Matrix::Zero(rows, cols));
  for (const auto& p : parts)
    require(p.rows() == rows && p.cols() == cols, "mean_rows: shape mismatch " + shape(p.value()));
  // Stack and average row r of every part into output row r.
  std::vector<std::vector<Index>> lists(static_cast<std::size_t>(rows));
  for (std::size_t k = 0; k < parts.size(); ++k)
    for (Eigen::Index r = 0; r < rows; ++r)
      lists[static_cast<std::size_t>(r)].push_back(static_cast<Index>(k * rows + r));
  return segment_mean(concat_rows(parts), Segments::build(lists, static_cast<Index>(parts.size() * rows)));
}

Var weighted_sum(const Var& weights, const std::vector<Var>& parts) {
  require(!parts.empty(), "weighted_sum: no inputs");
  require(weights.cols() == 1 && weights.rows() == static_cast<Eigen::Index>(parts.size()),
          "weighted_sum: need one weight per input");
  const Eigen::Index rows = parts.front().rows();
  for (const auto& p : parts) require(p.rows() == rows, "weighted_sum: shape mismatch");
  // Entry k of segment r reads row r of part k and uses weight k.
  std::vector<std::vector<Index>> lists(static_cast<std::size_t>(rows));
  std::vector<Index> weight_rows;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < parts.size(); ++k) {
      lists[static_cast<std::size_t>(r)].push_back(static_cast<Index>(k * rows + r));
      weight_rows.push_back(static_cast<Index>(k));
    }
  auto w = gather_rows(weights, std::make_shared<const std::vector<Index>>(std::move(weight_rows)));
  return segment_weighted_sum(w, concat_rows(parts),
                              Segments::build(lists, static_cast<Index>(parts.size() * rows)));
}

// ---------------------------------------------------------------------------
// Elementwise

Var leaky_relu(const Var& x, double slope) {
  Tape& t = same_tape({&x});
  const Matrix& xv = x.value();
  Matrix out = xv.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  const std::size_t ix = x.id();
  return t.record(std::move(out), {ix}, [ix, slope](Tape& tp, std::size_t self) {
    const Matrix& xv2 = tp.value(ix);
    tp.grad(ix).array() +=
        tp.grad(self).array() * xv2.array().unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
  });
}

Var prelu(const Var& x, const Var& slope) {
  Tape& t = same_tape({&x, &slope});
  require(slope.rows() == 1 && slope.cols() == 1, "prelu: slope must be (1x1)");
  const double a = slope.value()(0, 0);
  Matrix out = x.value().unaryExpr([a](double v) { return v > 0.0 ? v : a * v; });
  require_finite(out, "prelu");
  const std::size_t ix = x.id(), ia = slope.id();
  return t.record(std::move(out), {ix, ia}, [ix, ia](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    const Matrix& xv = tp.value(ix);
    const double a2 = tp.value(ia)(0, 0);
    if (tp.needs_grad(ix))
      tp.grad(ix).array() += g.array() * xv.array().unaryExpr([a2](double v) { return v > 0.0 ? 1.0 : a2; });
    if (tp.needs_grad(ia))
      tp.grad(ia)(0, 0) += (g.array() * xv.array().min(0.0)).sum();
  });
}

Var sigmoid(const Var& x) {
  Tape& t = same_tape({&x});
  Matrix out = x.value().unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  require_finite(out, "sigmoid");
  const std::size_t ix = x.id();
  return t.record(std::move(out), {ix}, [ix](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value(self);
    tp.grad(ix).array() += tp.grad(self).array() * y.array() * (1.0 - y.array());
  });
}

Var dropout(const Var& x, double p, bool training, Rng& rng) {
  require(p >= 0.0 && p < 1.0, "dropout: p must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  Tape& t = same_tape({&x});
  const Matrix& xv = x.value();
  auto mask = std::make_shared<Matrix>(xv.rows(), xv.cols());
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask->size(); ++i) mask->data()[i] = keep(rng) ? scale : 0.0;
  Matrix out = xv.cwiseProduct(*mask);
  const std::size_t ix = x.id();
  return t.record(std::move(out), {ix}, [ix, mask](Tape& tp, std::size_t self) {
    tp.grad(ix) += tp.grad(self).cwiseProduct(*mask);
  });
}

Var weighted_bce_mean(const Var& probs, std::shared_ptr<const std::vector<double>> labels,
                      std::shared_ptr<const std::vector<double>> weights, double eps) {
  Tape& t = same_tape({&probs});
  const Matrix& pv = probs.value();
  const auto n = static_cast<std::size_t>(pv.rows());
  require(pv.cols() == 1 && n > 0, "weighted_bce_mean: probabilities must be a non-empty column");
  require(labels->size() == n && weights->size() == n, "weighted_bce_mean: label/weight count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(pv(static_cast<Eigen::Index>(i), 0), eps, 1.0 - eps);
    const double y = (*labels)[i];
    total += -(*weights)[i] * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  Matrix out(1, 1);
  out(0, 0) = total / static_cast<double>(n);
  require_finite(out, "weighted_bce_mean");
  const std::size_t ip = probs.id();
  return t.record(std::move(out), {ip}, [ip, labels, weights, eps](Tape& tp, std::size_t self) {
    const Matrix& pv2 = tp.value(ip);
    Matrix& gp = tp.grad(ip);
    const double g = tp.grad(self)(0, 0) / static_cast<double>(pv2.rows());
    for (Eigen::Index i = 0; i < pv2.rows(); ++i) {
      const double p = pv2(i, 0);
      if (p < eps || p > 1.0 - eps) continue;  // clamped: flat
      const double y = (*labels)[static_cast<std::size_t>(i)];
      gp(i, 0) += -g * (*weights)[static_cast<std::size_t>(i)] * (y / p - (1.0 - y) / (1.0 - p));
    }
  });
}

// ---------------------------------------------------------------------------
// Gradient check

// Central differences on O(1) losses carry roundoff near 1e-11 at step 1e-5,
// so smaller gradients are compared on an absolute scale.
constexpr double kRelativeFloor = 1e-6;

GradientCheckResult gradient_check(const ScalarFunction& f, std::vector<Parameter*> params,
                                   double step) {
  auto evaluate = [&f]() {
    Tape tape;
    return f(tape).scalar();
  };

  std::vector<Matrix> saved_grads;
  for (Parameter* p : params) {
    saved_grads.push_back(p->grad);
    p->grad.setZero();
  }
  double base = 0.0;
  {
    Tape tape;
    Var loss = f(tape);
    base = loss.scalar();
    tape.backward(loss);
  }
  if (evaluate() != base) throw DiffError("gradient_check: function is not deterministic");

  GradientCheckResult result;
  for (Parameter* p : params) {
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      double& x = p->value.data()[k];
      const double orig = x;
      x = orig + step;
      const double up = evaluate();
      x = orig - step;
      const double down = evaluate();
      x = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p->grad.data()[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelativeFloor});
      const double err = std::abs(analytic - numeric) / denom;
      ++result.coordinates;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = p->name;
        result.worst_index = k;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->grad = saved_grads[i];
  return result;
}

GradientCheckResult gradient_check(const ScalarFunction& f, ParameterStore& store, double step) {
  std::vector<Parameter*> params;
  for (std::size_t i = 0; i < store.size(); ++i) params.push_back(&store[i]);
  return gradient_check(f, std::move(params), step);
}

}  // namespace sbgnn::diff
