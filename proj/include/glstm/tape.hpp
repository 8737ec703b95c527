#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "glstm/params.hpp"
#include "glstm/segments.hpp"
#include "glstm/tensor.hpp"

namespace glstm {

/// Handle to a value recorded on a Tape. Only meaningful for the tape that
/// created it.
struct Var {
  std::int32_t id = -1;
  [[nodiscard]] bool valid() const noexcept { return id >= 0; }
  friend bool operator==(Var, Var) = default;
};

/// Define-by-run reverse-mode differentiation tape.
///
/// Every op appends a node holding its forward value. `backward` walks the
/// nodes in reverse creation order, so each node's adjoint is complete
/// before it is propagated. A tape is used by one thread; parameter leaves
/// only read the ParamStore, so many tapes may share one store.
class Tape {
 public:
  enum class Op : std::uint8_t {
    leaf,
    matvec,
    linear,
    add,
    sub,
    mul,
    scale,
    sigmoid,
    tanh,
    mean_of,
    sum,
    affine_rows,
    segment_mean,
    row,
    stack_rows,
    softmax_ce,
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // Leaves.
  Var constant(Tensor value);
  /// Differentiable leaf whose gradient is read back with grad().
  Var variable(Tensor value);
  /// Leaf bound to a store entry; its gradient lands in accumulate().
  /// Repeated calls for the same index return the same leaf.
  Var param(const ParamStore& store, std::size_t index);

  // Ops. All throw DimensionError on non-conforming shapes.
  Var matvec(Var m, Var v);
  /// bias + sum_k terms[k].first * terms[k].second. `bias` may be invalid.
  Var linear(Var bias, std::span<const std::pair<Var, Var>> terms);
  Var linear(Var bias, std::initializer_list<std::pair<Var, Var>> terms) {
    return linear(bias, std::span<const std::pair<Var, Var>>(terms.begin(), terms.size()));
  }
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var sigmoid(Var a);
  Var tanh(Var a);
  /// Arithmetic mean of equally shaped inputs. Precondition: non-empty.
  Var mean_of(std::span<const Var> inputs);
  Var sum(Var a);
  /// Row-wise affine map: out[n] = weight * x[n] + bias.
  Var affine_rows(Var weight, Var bias, Var x);
  /// out[r] = mean of x rows listed in group r.
  Var segment_mean(Var x, std::shared_ptr<const Segments> groups);
  Var row(Var x, std::size_t index);
  Var stack_rows(std::span<const Var> rows);
  /// Cross-entropy of row-wise softmax(logits) against a count matrix:
  /// -sum_{r,c} counts[r][c] * log softmax(logits[r])[c] / normalizer.
  Var softmax_ce(Var logits, std::shared_ptr<const Tensor> counts, double normalizer);

  [[nodiscard]] const Tensor& value(Var v) const;
  /// Adjoint after backward(); zero-shaped if the node was not reached.
  [[nodiscard]] const Tensor& grad(Var v) const;
  [[nodiscard]] bool requires_grad(Var v) const { return node(v).needs_grad; }
  [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }

  /// Fills adjoints for every node upstream of `loss`. Throws ContractError
  /// unless `loss` holds exactly one value.
  void backward(Var loss);

  /// Adds parameter-leaf adjoints into `out`, which must match the store
  /// the leaves were bound to.
  void accumulate(Gradients& out) const;

 private:
  struct Node {
    Op op = Op::leaf;
    bool needs_grad = false;
    std::int32_t a = -1;
    std::int32_t b = -1;
    std::vector<std::int32_t> inputs;  // variadic ops
    Tensor value;
    const Tensor* external = nullptr;  // parameter leaves read the store in place
    Tensor grad;
    double scalar = 0.0;
    std::size_t index = 0;
    std::int32_t param = -1;
    std::shared_ptr<const Segments> groups;
    std::shared_ptr<const Tensor> aux;
    Tensor cache;  // softmax probabilities for softmax_ce
  };

  Var push(Node node);
  const Node& node(Var v) const;
  const Tensor& val(std::int32_t id) const;
  Tensor& adjoint(std::int32_t id);
  void propagate(const Node& n);

  std::vector<Node> nodes_;
  std::vector<std::int32_t> param_leaf_;  // store index -> node id
  const ParamStore* store_ = nullptr;
};

}  // namespace glstm
