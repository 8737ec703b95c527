#include "glstm/tape.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "glstm/errors.hpp"

namespace glstm {
namespace {

double logistic(double x) noexcept {
  // Split by sign so exp() never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

bool is_vector(const Tensor& t) { return t.rank() == 1; }
bool is_matrix(const Tensor& t) { return t.rank() == 2; }

}  // namespace

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw ContractError(fmt::format("variable {} does not belong to this tape", v.id));
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Tensor& Tape::val(std::int32_t id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.external ? *n.external : n.value;
}

const Tensor& Tape::value(Var v) const {
  node(v);
  return val(v.id);
}

const Tensor& Tape::grad(Var v) const { return node(v).grad; }

Tensor& Tape::adjoint(std::int32_t id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.shape.empty()) n.grad = Tensor::zeros(val(id).shape);
  return n.grad;
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  return push(std::move(n));
}

Var Tape::param(const ParamStore& store, std::size_t index) {
  if (store_ == nullptr) {
    store_ = &store;
  } else if (store_ != &store) {
    throw ContractError("one tape cannot bind parameters from two stores");
  }
  if (index >= store.size()) throw ArgumentError("parameter index out of range");
  if (param_leaf_.size() < store.size()) param_leaf_.resize(store.size(), -1);
  if (param_leaf_[index] >= 0) return Var{param_leaf_[index]};
  Node n;
  n.external = &store[index].value;
  n.needs_grad = true;
  n.param = static_cast<std::int32_t>(index);
  const Var v = push(std::move(n));
  param_leaf_[index] = v.id;
  return v;
}

Var Tape::matvec(Var m, Var v) {
  const Tensor& M = value(m);
  const Tensor& x = value(v);
  if (!is_matrix(M) || !is_vector(x) || M.shape[1] != x.shape[0]) {
    throw DimensionError(fmt::format("matvec: {} * {}", shape_string(M.shape), shape_string(x.shape)));
  }
  const std::size_t r = M.shape[0];
  const std::size_t c = M.shape[1];
  Tensor out = Tensor::zeros({r});
  for (std::size_t i = 0; i < r; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += M.data[i * c + j] * x.data[j];
    out.data[i] = acc;
  }
  Node n;
  n.op = Op::matvec;
  n.a = m.id;
  n.b = v.id;
  n.needs_grad = node(m).needs_grad || node(v).needs_grad;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::linear(Var bias, std::span<const std::pair<Var, Var>> terms) {
  std::size_t r = 0;
  if (bias.valid()) {
    const Tensor& b = value(bias);
    if (!is_vector(b)) throw DimensionError("linear: bias must be a vector");
    r = b.shape[0];
  } else if (!terms.empty()) {
    r = value(terms.front().first).shape.at(0);
  } else {
    throw ContractError("linear: needs a bias or at least one term");
  }
  Tensor out = bias.valid() ? value(bias) : Tensor::zeros({r});
  Node n;
  n.op = Op::linear;
  n.a = bias.id;
  n.needs_grad = bias.valid() && node(bias).needs_grad;
  n.inputs.reserve(terms.size() * 2);
  for (const auto& [m, v] : terms) {
    const Tensor& M = value(m);
    const Tensor& x = value(v);
    if (!is_matrix(M) || !is_vector(x) || M.shape[0] != r || M.shape[1] != x.shape[0]) {
      throw DimensionError(fmt::format("linear: term {} * {} into [{}]", shape_string(M.shape),
                                       shape_string(x.shape), r));
    }
    const std::size_t c = M.shape[1];
    for (std::size_t i = 0; i < r; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < c; ++j) acc += M.data[i * c + j] * x.data[j];
      out.data[i] += acc;
    }
    n.inputs.push_back(m.id);
    n.inputs.push_back(v.id);
    n.needs_grad = n.needs_grad || node(m).needs_grad || node(v).needs_grad;
  }
  n.value = std::move(out);
  return push(std::move(n));
}

namespace {

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, const char* what, F f) {
  require_same_shape(a, b, what);
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = f(a.data[i], b.data[i]);
  return out;
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out = a;
  for (double& x : out.data) x = f(x);
  return out;
}

}  // namespace

Var Tape::add(Var a, Var b) {
  Node n;
  n.op = Op::add;
  n.value = zip(value(a), value(b), "add", [](double x, double y) { return x + y; });
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  Node n;
  n.op = Op::sub;
  n.value = zip(value(a), value(b), "sub", [](double x, double y) { return x - y; });
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  Node n;
  n.op = Op::mul;
  n.value = zip(value(a), value(b), "mul", [](double x, double y) { return x * y; });
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(n));
}

Var Tape::scale(Var a, double s) {
  Node n;
  n.op = Op::scale;
  n.value = map(value(a), [s](double x) { return x * s; });
  n.a = a.id;
  n.scalar = s;
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  Node n;
  n.op = Op::sigmoid;
  n.value = map(value(a), logistic);
  n.a = a.id;
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.op = Op::tanh;
  n.value = map(value(a), [](double x) { return std::tanh(x); });
  n.a = a.id;
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::mean_of(std::span<const Var> inputs) {
  if (inputs.empty()) throw ContractError("mean_of: empty input list");
  Tensor out = value(inputs.front());
  Node n;
  n.op = Op::mean_of;
  n.inputs.push_back(inputs.front().id);
  n.needs_grad = node(inputs.front()).needs_grad;
  for (std::size_t k = 1; k < inputs.size(); ++k) {
    const Tensor& x = value(inputs[k]);
    require_same_shape(out, x, "mean_of");
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += x.data[i];
    n.inputs.push_back(inputs[k].id);
    n.needs_grad = n.needs_grad || node(inputs[k]).needs_grad;
  }
  const auto count = static_cast<double>(inputs.size());
  for (double& x : out.data) x /= count;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  double acc = 0.0;
  for (double x : value(a).data) acc += x;
  Node n;
  n.op = Op::sum;
  n.value = Tensor::scalar(acc);
  n.a = a.id;
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::affine_rows(Var weight, Var bias, Var x) {
  const Tensor& W = value(weight);
  const Tensor& b = value(bias);
  const Tensor& X = value(x);
  if (!is_matrix(W) || !is_vector(b) || !is_matrix(X) || W.shape[0] != b.shape[0] ||
      W.shape[1] != X.shape[1]) {
    throw DimensionError(fmt::format("affine_rows: W{} b{} X{}", shape_string(W.shape),
                                     shape_string(b.shape), shape_string(X.shape)));
  }
  const std::size_t rows = X.shape[0];
  const std::size_t out_dim = W.shape[0];
  const std::size_t in_dim = W.shape[1];
  Tensor out = Tensor::zeros({rows, out_dim});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = X.data.data() + r * in_dim;
    double* o = out.data.data() + r * out_dim;
    for (std::size_t i = 0; i < out_dim; ++i) {
      double acc = b.data[i];
      for (std::size_t j = 0; j < in_dim; ++j) acc += W.data[i * in_dim + j] * xr[j];
      o[i] = acc;
    }
  }
  Node n;
  n.op = Op::affine_rows;
  n.inputs = {weight.id, bias.id, x.id};
  n.needs_grad = node(weight).needs_grad || node(bias).needs_grad || node(x).needs_grad;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::segment_mean(Var x, std::shared_ptr<const Segments> groups) {
  const Tensor& X = value(x);
  if (!is_matrix(X)) throw DimensionError("segment_mean: input must be a matrix");
  if (!groups || groups->members.size() != X.shape[0]) {
    throw DimensionError("segment_mean: groups do not cover the input rows");
  }
  const std::size_t cols = X.shape[1];
  const std::size_t count = groups->count();
  Tensor out = Tensor::zeros({count, cols});
  for (std::size_t r = 0; r < count; ++r) {
    const auto members = groups->group(r);
    if (members.empty()) throw ContractError("segment_mean: empty group");
    double* o = out.data.data() + r * cols;
    for (std::size_t p : members) {
      const double* xp = X.data.data() + p * cols;
      for (std::size_t c = 0; c < cols; ++c) o[c] += xp[c];
    }
    const auto n = static_cast<double>(members.size());
    for (std::size_t c = 0; c < cols; ++c) o[c] /= n;
  }
  Node n;
  n.op = Op::segment_mean;
  n.a = x.id;
  n.groups = std::move(groups);
  n.needs_grad = node(x).needs_grad;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::row(Var x, std::size_t index) {
  const Tensor& X = value(x);
  if (!is_matrix(X) || index >= X.shape[0]) throw DimensionError("row: index out of range");
  const auto r = X.row(index);
  Node n;
  n.op = Op::row;
  n.a = x.id;
  n.index = index;
  n.needs_grad = node(x).needs_grad;
  n.value = Tensor::vector({r.begin(), r.end()});
  return push(std::move(n));
}

Var Tape::stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ContractError("stack_rows: no rows");
  const std::size_t cols = value(rows.front()).size();
  Tensor out = Tensor::zeros({rows.size(), cols});
  Node n;
  n.op = Op::stack_rows;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Tensor& v = value(rows[r]);
    if (!is_vector(v) || v.size() != cols) throw DimensionError("stack_rows: ragged rows");
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r * cols));
    n.inputs.push_back(rows[r].id);
    n.needs_grad = n.needs_grad || node(rows[r]).needs_grad;
  }
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::softmax_ce(Var logits, std::shared_ptr<const Tensor> counts, double normalizer) {
  const Tensor& Z = value(logits);
  if (!counts || !is_matrix(Z) || Z.shape != counts->shape) {
    throw DimensionError("softmax_ce: logits and counts must be equally shaped matrices");
  }
  if (!(normalizer > 0.0)) throw ArgumentError("softmax_ce: normalizer must be positive");
  const std::size_t rows = Z.shape[0];
  const std::size_t cols = Z.shape[1];
  Tensor probs = Tensor::zeros(Z.shape);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto z = Z.row(r);
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);
    const double log_denom = std::log(denom) + zmax;
    for (std::size_t c = 0; c < cols; ++c) {
      probs.at(r, c) = std::exp(z[c] - log_denom);
      const double w = counts->at(r, c);
      if (w != 0.0) loss -= w * (z[c] - log_denom);
    }
  }
  Node n;
  n.op = Op::softmax_ce;
  n.a = logits.id;
  n.scalar = normalizer;
  n.aux = std::move(counts);
  n.cache = std::move(probs);
  n.needs_grad = node(logits).needs_grad;
  n.value = Tensor::scalar(loss / normalizer);
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  const Node& root = node(loss);
  if (!val(loss.id).is_scalar()) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_string(val(loss.id).shape));
  }
  for (auto& n : nodes_) n.grad = Tensor{};
  if (!root.needs_grad) return;
  adjoint(loss.id).data[0] = 1.0;
  for (std::size_t k = static_cast<std::size_t>(loss.id) + 1; k-- > 0;) {
    const Node& n = nodes_[k];
    if (!n.needs_grad || n.grad.shape.empty() || n.op == Op::leaf) continue;
    propagate(n);
  }
}

void Tape::propagate(const Node& n) {
  const Tensor& g = n.grad;
  auto wants = [this](std::int32_t id) { return id >= 0 && nodes_[static_cast<std::size_t>(id)].needs_grad; };

  switch (n.op) {
    case Op::leaf:
      break;
    case Op::matvec:
    case Op::linear: {
      if (n.op == Op::linear && wants(n.a)) {
        Tensor& gb = adjoint(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i];
      }
      const std::size_t terms = n.op == Op::matvec ? 1 : n.inputs.size() / 2;
      for (std::size_t t = 0; t < terms; ++t) {
        const std::int32_t mid = n.op == Op::matvec ? n.a : n.inputs[2 * t];
        const std::int32_t vid = n.op == Op::matvec ? n.b : n.inputs[2 * t + 1];
        const Tensor& M = val(mid);
        const Tensor& x = val(vid);
        const std::size_t r = M.shape[0];
        const std::size_t c = M.shape[1];
        if (wants(mid)) {
          Tensor& gm = adjoint(mid);
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) gm.data[i * c + j] += g.data[i] * x.data[j];
          }
        }
        if (wants(vid)) {
          Tensor& gv = adjoint(vid);
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) gv.data[j] += M.data[i * c + j] * g.data[i];
          }
        }
      }
      break;
    }
    case Op::add:
    case Op::sub: {
      const double sign = n.op == Op::add ? 1.0 : -1.0;
      if (wants(n.a)) {
        Tensor& ga = adjoint(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
      }
      if (wants(n.b)) {
        Tensor& gb = adjoint(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += sign * g.data[i];
      }
      break;
    }
    case Op::mul: {
      const Tensor& x = val(n.a);
      const Tensor& y = val(n.b);
      if (wants(n.a)) {
        Tensor& ga = adjoint(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * y.data[i];
      }
      if (wants(n.b)) {
        Tensor& gb = adjoint(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * x.data[i];
      }
      break;
    }
    case Op::scale: {
      Tensor& ga = adjoint(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * n.scalar;
      break;
    }
    case Op::sigmoid: {
      Tensor& ga = adjoint(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = n.value.data[i];
        ga.data[i] += g.data[i] * s * (1.0 - s);
      }
      break;
    }
    case Op::tanh: {
      Tensor& ga = adjoint(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = n.value.data[i];
        ga.data[i] += g.data[i] * (1.0 - t * t);
      }
      break;
    }
    case Op::mean_of: {
      const auto count = static_cast<double>(n.inputs.size());
      for (std::int32_t id : n.inputs) {
        if (!wants(id)) continue;
        Tensor& gi = adjoint(id);
        for (std::size_t i = 0; i < g.size(); ++i) gi.data[i] += g.data[i] / count;
      }
      break;
    }
    case Op::sum: {
      Tensor& ga = adjoint(n.a);
      for (double& v : ga.data) v += g.data[0];
      break;
    }
    case Op::affine_rows: {
      const std::int32_t wid = n.inputs[0];
      const std::int32_t bid = n.inputs[1];
      const std::int32_t xid = n.inputs[2];
      const Tensor& W = val(wid);
      const Tensor& X = val(xid);
      const std::size_t rows = X.shape[0];
      const std::size_t out_dim = W.shape[0];
      const std::size_t in_dim = W.shape[1];
      if (wants(bid)) {
        Tensor& gb = adjoint(bid);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t i = 0; i < out_dim; ++i) gb.data[i] += g.data[r * out_dim + i];
        }
      }
      if (wants(wid)) {
        Tensor& gw = adjoint(wid);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t i = 0; i < out_dim; ++i) {
            const double gi = g.data[r * out_dim + i];
            if (gi == 0.0) continue;
            for (std::size_t j = 0; j < in_dim; ++j) gw.data[i * in_dim + j] += gi * X.data[r * in_dim + j];
          }
        }
      }
      if (wants(xid)) {
        Tensor& gx = adjoint(xid);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t i = 0; i < out_dim; ++i) {
            const double gi = g.data[r * out_dim + i];
            for (std::size_t j = 0; j < in_dim; ++j) gx.data[r * in_dim + j] += W.data[i * in_dim + j] * gi;
          }
        }
      }
      break;
    }
    case Op::segment_mean: {
      Tensor& gx = adjoint(n.a);
      const std::size_t cols = g.shape[1];
      for (std::size_t r = 0; r < n.groups->count(); ++r) {
        const auto members = n.groups->group(r);
        const auto size = static_cast<double>(members.size());
        for (std::size_t p : members) {
          for (std::size_t c = 0; c < cols; ++c) gx.data[p * cols + c] += g.data[r * cols + c] / size;
        }
      }
      break;
    }
    case Op::row: {
      Tensor& gx = adjoint(n.a);
      const std::size_t cols = gx.shape[1];
      for (std::size_t c = 0; c < cols; ++c) gx.data[n.index * cols + c] += g.data[c];
      break;
    }
    case Op::stack_rows: {
      const std::size_t cols = g.shape[1];
      for (std::size_t r = 0; r < n.inputs.size(); ++r) {
        if (!wants(n.inputs[r])) continue;
        Tensor& gr = adjoint(n.inputs[r]);
        for (std::size_t c = 0; c < cols; ++c) gr.data[c] += g.data[r * cols + c];
      }
      break;
    }
    case Op::softmax_ce: {
      // d/dz_rc = (p_rc * sum_k w_rk - w_rc) / normalizer
      Tensor& gz = adjoint(n.a);
      const Tensor& w = *n.aux;
      const std::size_t rows = w.shape[0];
      const std::size_t cols = w.shape[1];
      const double scale = g.data[0] / n.scalar;
      for (std::size_t r = 0; r < rows; ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) total += w.at(r, c);
        if (total == 0.0) continue;
        for (std::size_t c = 0; c < cols; ++c) {
          gz.data[r * cols + c] += scale * (n.cache.at(r, c) * total - w.at(r, c));
        }
      }
      break;
    }
  }
}

void Tape::accumulate(Gradients& out) const {
  if (store_ == nullptr) return;
  if (out.size() != store_->size()) throw DimensionError("accumulate: gradient set does not match the store");
  for (std::size_t i = 0; i < param_leaf_.size(); ++i) {
    const std::int32_t id = param_leaf_[i];
    if (id < 0) continue;
    const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
    if (g.shape.empty()) continue;
    Tensor& dst = out[i];
    require_same_shape(dst, g, "accumulate");
    for (std::size_t k = 0; k < g.size(); ++k) dst.data[k] += g.data[k];
  }
}

}  // namespace glstm
