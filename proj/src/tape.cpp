#include "thermadapt/tape.hpp"

#include <cmath>
#include <string>

#include "thermadapt/errors.hpp"

namespace thermadapt {

namespace {

[[noreturn]] void shape_error(OpKind kind, const std::vector<const Matrix*>& in) {
  std::string msg = std::string(op_name(kind)) + ": incompatible shapes";
  for (const auto* m : in) msg += " " + m->shape_string();
  throw DimensionError(msg);
}

void accumulate(Matrix& into, Matrix&& g) {
  if (into.empty()) {
    into = std::move(g);
    return;
  }
  double* dst = into.data();
  const double* src = g.data();
  for (std::size_t i = 0, n = into.size(); i < n; ++i) dst[i] += src[i];
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::parameter: return "parameter";
    case OpKind::constant: return "constant";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::hadamard: return "hadamard";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::tanh: return "tanh";
    case OpKind::concat_rows: return "concat_rows";
    case OpKind::slice_rows: return "slice_rows";
    case OpKind::scalar_mul: return "scalar_mul";
    case OpKind::sum_squares: return "sum_squares";
  }
  return "unknown";
}

NodeId Tape::parameter(Matrix value) {
  nodes_.push_back(Node{OpKind::parameter, {}, {}, std::move(value), true});
  parameters_.push_back(nodes_.size() - 1);
  return nodes_.size() - 1;
}

NodeId Tape::constant(Matrix value) {
  nodes_.push_back(Node{OpKind::constant, {}, {}, std::move(value), false});
  return nodes_.size() - 1;
}

NodeId Tape::record(OpKind kind, std::span<const NodeId> inputs, OpArgs args) {
  if (kind == OpKind::parameter || kind == OpKind::constant)
    throw ContractError("record: leaves are created with parameter() or constant()");
  const std::size_t expected = kind == OpKind::concat_rows                                     ? inputs.size()
                               : (kind == OpKind::matmul || kind == OpKind::add || kind == OpKind::hadamard) ? 2
                                                                                                 : 1;
  if (inputs.size() != expected || inputs.empty())
    throw ContractError(std::string(op_name(kind)) + ": wrong number of inputs");
  Node node{kind, std::vector<NodeId>(inputs.begin(), inputs.end()), args, {}, false};
  for (NodeId id : node.inputs) {
    if (id >= nodes_.size())
      throw ContractError(std::string(op_name(kind)) + ": input node " + std::to_string(id) + " does not exist yet");
    node.requires_grad = node.requires_grad || nodes_[id].requires_grad;
  }
  node.value = evaluate(node);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

Matrix Tape::evaluate(const Node& node) const {
  std::vector<const Matrix*> in;
  in.reserve(node.inputs.size());
  for (NodeId id : node.inputs) in.push_back(&nodes_[id].value);

  switch (node.kind) {
    case OpKind::matmul:
      if (in[0]->cols() != in[1]->rows()) shape_error(node.kind, in);
      return thermadapt::matmul(*in[0], *in[1]);
    case OpKind::add: {
      const Matrix& a = *in[0];
      const Matrix& b = *in[1];
      Matrix out = a;
      if (a.same_shape(b)) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
      } else if (b.cols() == 1 && b.rows() == a.rows()) {
        for (std::size_t r = 0; r < a.rows(); ++r)
          for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) += b(r, 0);
      } else {
        shape_error(node.kind, in);
      }
      return out;
    }
    case OpKind::hadamard: {
      if (!in[0]->same_shape(*in[1])) shape_error(node.kind, in);
      Matrix out = *in[0];
      for (std::size_t i = 0; i < out.size(); ++i) out[i] *= (*in[1])[i];
      return out;
    }
    case OpKind::sigmoid: {
      Matrix out = *in[0];
      sigmoid_inplace(out.values());
      return out;
    }
    case OpKind::tanh: {
      Matrix out = *in[0];
      tanh_inplace(out.values());
      return out;
    }
    case OpKind::concat_rows: {
      const std::size_t cols = in[0]->cols();
      std::size_t rows = 0;
      for (const auto* m : in) {
        if (m->cols() != cols) shape_error(node.kind, in);
        rows += m->rows();
      }
      Matrix out(rows, cols);
      double* dst = out.data();
      for (const auto* m : in) {
        std::copy(m->data(), m->data() + m->size(), dst);
        dst += m->size();
      }
      return out;
    }
    case OpKind::slice_rows: {
      const Matrix& a = *in[0];
      if (node.args.begin >= node.args.end || node.args.end > a.rows())
        throw DimensionError("slice_rows: rows [" + std::to_string(node.args.begin) + ", " +
                             std::to_string(node.args.end) + ") out of range for " + a.shape_string());
      Matrix out(node.args.end - node.args.begin, a.cols());
      std::copy(a.data() + node.args.begin * a.cols(), a.data() + node.args.end * a.cols(), out.data());
      return out;
    }
    case OpKind::scalar_mul: {
      Matrix out = *in[0];
      for (double& v : out.values()) v *= node.args.scalar;
      return out;
    }
    case OpKind::sum_squares:
      return Matrix(1, 1, squared_norm(*in[0]));
    case OpKind::parameter:
    case OpKind::constant:
      break;
  }
  return node.value;
}

const Matrix& Tape::value(NodeId id) const {
  if (id >= nodes_.size()) throw ContractError("node " + std::to_string(id) + " does not exist");
  return nodes_[id].value;
}

OpKind Tape::kind(NodeId id) const {
  if (id >= nodes_.size()) throw ContractError("node " + std::to_string(id) + " does not exist");
  return nodes_[id].kind;
}

void Tape::set_value(NodeId leaf, Matrix value) {
  Node& node = nodes_.at(leaf);
  if (node.kind != OpKind::parameter && node.kind != OpKind::constant)
    throw ContractError("set_value: node " + std::to_string(leaf) + " is not a leaf");
  if (!node.value.same_shape(value))
    throw DimensionError("set_value: " + value.shape_string() + " replacing " + node.value.shape_string());
  node.value = std::move(value);
}

void Tape::replay() {
  for (auto& node : nodes_)
    if (node.kind != OpKind::parameter && node.kind != OpKind::constant) node.value = evaluate(node);
}

std::vector<Matrix> Tape::backward(NodeId loss) const {
  if (loss >= nodes_.size()) throw ContractError("backward: loss node does not exist");
  if (nodes_[loss].value.rows() != 1 || nodes_[loss].value.cols() != 1)
    throw ContractError("backward: loss must be 1x1, got " + nodes_[loss].value.shape_string());

  std::vector<Matrix> grads(loss + 1);
  grads[loss] = Matrix(1, 1, 1.0);

  for (std::size_t idx = loss + 1; idx-- > 0;) {
    const Node& node = nodes_[idx];
    const Matrix& g = grads[idx];
    if (g.empty() || !node.requires_grad) continue;

    auto wants = [&](std::size_t k) { return nodes_[node.inputs[k]].requires_grad; };
    auto value_of = [&](std::size_t k) -> const Matrix& { return nodes_[node.inputs[k]].value; };

    switch (node.kind) {
      case OpKind::matmul:
        if (wants(0)) accumulate(grads[node.inputs[0]], matmul_nt(g, value_of(1)));
        if (wants(1)) accumulate(grads[node.inputs[1]], matmul_tn(value_of(0), g));
        break;
      case OpKind::add:
        if (wants(0)) accumulate(grads[node.inputs[0]], Matrix(g));
        if (wants(1)) {
          const Matrix& b = value_of(1);
          if (b.same_shape(g)) {
            accumulate(grads[node.inputs[1]], Matrix(g));
          } else {
            Matrix col(b.rows(), 1);
            for (std::size_t r = 0; r < g.rows(); ++r)
              for (std::size_t c = 0; c < g.cols(); ++c) col(r, 0) += g(r, c);
            accumulate(grads[node.inputs[1]], std::move(col));
          }
        }
        break;
      case OpKind::hadamard:
        for (std::size_t k = 0; k < 2; ++k) {
          if (!wants(k)) continue;
          Matrix d = g;
          const Matrix& other = value_of(1 - k);
          for (std::size_t i = 0; i < d.size(); ++i) d[i] *= other[i];
          accumulate(grads[node.inputs[k]], std::move(d));
        }
        break;
      case OpKind::sigmoid: {
        Matrix d = g;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= node.value[i] * (1.0 - node.value[i]);
        accumulate(grads[node.inputs[0]], std::move(d));
        break;
      }
      case OpKind::tanh: {
        Matrix d = g;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - node.value[i] * node.value[i];
        accumulate(grads[node.inputs[0]], std::move(d));
        break;
      }
      case OpKind::concat_rows: {
        const double* src = g.data();
        for (std::size_t k = 0; k < node.inputs.size(); ++k) {
          const Matrix& part = value_of(k);
          if (wants(k)) {
            Matrix d(part.rows(), part.cols());
            std::copy(src, src + part.size(), d.data());
            accumulate(grads[node.inputs[k]], std::move(d));
          }
          src += part.size();
        }
        break;
      }
      case OpKind::slice_rows: {
        const Matrix& a = value_of(0);
        Matrix& into = grads[node.inputs[0]];
        if (into.empty()) into = Matrix(a.rows(), a.cols());
        double* dst = into.data() + node.args.begin * a.cols();
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        break;
      }
      case OpKind::scalar_mul: {
        Matrix d = g;
        for (double& v : d.values()) v *= node.args.scalar;
        accumulate(grads[node.inputs[0]], std::move(d));
        break;
      }
      case OpKind::sum_squares: {
        Matrix d = value_of(0);
        const double s = 2.0 * g(0, 0);
        for (double& v : d.values()) v *= s;
        accumulate(grads[node.inputs[0]], std::move(d));
        break;
      }
      case OpKind::parameter:
      case OpKind::constant:
        break;
    }
  }

  std::vector<Matrix> out;
  out.reserve(parameters_.size());
  for (NodeId id : parameters_) {
    if (id < grads.size() && !grads[id].empty()) {
      out.push_back(std::move(grads[id]));
    } else {
      out.emplace_back(nodes_[id].value.rows(), nodes_[id].value.cols());
    }
  }
  return out;
}

}  // namespace thermadapt
