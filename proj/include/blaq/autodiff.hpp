#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "blaq/tensor.hpp"

namespace blaq::ad {

enum class Op {
  Input,
  Param,
  Constant,
  MatMul,
  AddBias,
  Add,
  Sub,
  Mul,
  Relu,
  SoftmaxXent,
  Square,
  Abs,
  Power,
  Scale,
  Shift,
  Sum,
  Mean,
  Argmax,
};

const char* op_name(Op op);

using NodeId = std::size_t;
using Bindings = std::map<std::string, Tensor>;

// Define-then-run graph. Nodes are appended in topological order, so shapes
// are checked when a node is created and forward/backward are linear sweeps.
class Graph {
 public:
  NodeId input(const std::string& name, Shape shape);
  NodeId param(const std::string& name, Shape shape);
  NodeId constant(Tensor value);

  NodeId matmul(NodeId a, NodeId b);
  // x: (m x n), b: (n)
  NodeId add_bias(NodeId x, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId relu(NodeId x);
  // logits: (m x c), labels: (m) holding class indices. Mean over rows.
  NodeId softmax_xent(NodeId logits, NodeId labels);
  NodeId square(NodeId x);
  NodeId abs(NodeId x);
  // sign(x) * |x|^p
  NodeId power(NodeId x, double p);
  NodeId scale(NodeId x, double c);
  NodeId shift(NodeId x, double c);
  NodeId sum(NodeId x);
  NodeId mean(NodeId x);
  // Row-wise argmax of a matrix. Forward only.
  NodeId argmax(NodeId x);

  void set_loss(NodeId id);

  double forward(const Bindings& bindings);
  // Gradients of the loss with respect to every parameter, keyed by name.
  std::map<std::string, Tensor> backward();

  const Tensor& value(NodeId id) const;
  const Tensor& gradient(NodeId id) const;
  bool has_gradient(NodeId id) const;
  const Shape& shape(NodeId id) const;
  Op op(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }
  std::vector<std::string> param_names() const;
  NodeId loss() const;

 private:
  struct Node {
    Node(Op op_, std::vector<NodeId> in_, Shape shape_, double attr_ = 0.0, std::string name_ = {}, Tensor value_ = {})
        : op(op_), in(std::move(in_)), shape(std::move(shape_)), attr(attr_), name(std::move(name_)),
          value(std::move(value_)) {}

    Op op;
    std::vector<NodeId> in;
    Shape shape;
    double attr = 0.0;
    std::string name;
    Tensor value;
    Tensor aux;  // softmax probabilities for SoftmaxXent
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;
  std::string describe(NodeId id) const;
  void eval(NodeId id);
  void adjoint(NodeId id, std::vector<Tensor>& grads, const std::vector<char>& live) const;

  std::vector<Node> nodes_;
  std::map<std::string, NodeId> names_;
  std::vector<Tensor> grads_;
  std::vector<char> has_grad_;
  NodeId loss_ = static_cast<NodeId>(-1);
  bool forwarded_ = false;
};

}  // namespace blaq::ad
