#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "thermadapt/matrix.hpp"

namespace thermadapt {

using NodeId = std::size_t;

enum class OpKind {
  parameter,
  constant,
  matmul,
  add,
  hadamard,
  sigmoid,
  tanh,
  concat_rows,
  slice_rows,
  scalar_mul,
  sum_squares,
};

std::string_view op_name(OpKind kind);

/// Extra operands for ops that take them: `scalar` for scalar_mul, `[begin, end)` for slice_rows.
struct OpArgs {
  double scalar = 1.0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Reverse-mode autodiff tape. Nodes are appended in evaluation order, so the
/// node list is always a topological order of the graph.
///
/// `add` also accepts a column vector as right operand and broadcasts it over
/// the columns of the left operand (bias add on a batch).
class Tape {
 public:
  NodeId parameter(Matrix value);
  NodeId constant(Matrix value);

  /// Computes and caches the forward value of a new node.
  NodeId record(OpKind kind, std::span<const NodeId> inputs, OpArgs args = {});

  NodeId matmul(NodeId a, NodeId b) { return record2(OpKind::matmul, a, b); }
  NodeId add(NodeId a, NodeId b) { return record2(OpKind::add, a, b); }
  NodeId hadamard(NodeId a, NodeId b) { return record2(OpKind::hadamard, a, b); }
  NodeId sigmoid(NodeId a) { return record1(OpKind::sigmoid, a); }
  NodeId tanh(NodeId a) { return record1(OpKind::tanh, a); }
  NodeId concat_rows(std::span<const NodeId> parts) { return record(OpKind::concat_rows, parts); }
  NodeId slice_rows(NodeId a, std::size_t begin, std::size_t end) {
    return record1(OpKind::slice_rows, a, {1.0, begin, end});
  }
  NodeId scalar_mul(NodeId a, double s) { return record1(OpKind::scalar_mul, a, {s, 0, 0}); }
  NodeId sum_squares(NodeId a) { return record1(OpKind::sum_squares, a); }

  const Matrix& value(NodeId id) const;
  OpKind kind(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }
  /// Parameter node ids in registration order.
  const std::vector<NodeId>& parameters() const { return parameters_; }

  /// Replaces the value of a leaf node; call `replay()` to propagate.
  void set_value(NodeId leaf, Matrix value);
  /// Recomputes every non-leaf node in insertion order.
  void replay();

  /// Gradient of the scalar `loss` with respect to every parameter node,
  /// ordered as `parameters()`.
  std::vector<Matrix> backward(NodeId loss) const;

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    OpArgs args;
    Matrix value;
    bool requires_grad = false;
  };

  NodeId record1(OpKind kind, NodeId a, OpArgs args = {}) {
    const NodeId in[1] = {a};
    return record(kind, in, args);
  }
  NodeId record2(OpKind kind, NodeId a, NodeId b) {
    const NodeId in[2] = {a, b};
    return record(kind, in);
  }

  Matrix evaluate(const Node& node) const;

  std::vector<Node> nodes_;
  std::vector<NodeId> parameters_;
};

}  // namespace thermadapt
