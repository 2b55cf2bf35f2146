#include "blaq/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "blaq/errors.hpp"

namespace blaq::ad {

namespace {

constexpr NodeId kNone = static_cast<NodeId>(-1);

double sgn(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Input: return "input";
    case Op::Param: return "param";
    case Op::Constant: return "constant";
    case Op::MatMul: return "matmul";
    case Op::AddBias: return "add_bias";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Relu: return "relu";
    case Op::SoftmaxXent: return "softmax_xent";
    case Op::Square: return "square";
    case Op::Abs: return "abs";
    case Op::Power: return "power";
    case Op::Scale: return "scale";
    case Op::Shift: return "shift";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::Argmax: return "argmax";
  }
  return "?";
}

NodeId Graph::push(Node n) {
  for (NodeId i : n.in)
    if (i >= nodes_.size()) raise(ErrorKind::Shape, std::string(op_name(n.op)) + ": unknown input node " + std::to_string(i));
  nodes_.push_back(std::move(n));
  forwarded_ = false;
  return nodes_.size() - 1;
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id >= nodes_.size()) raise(ErrorKind::Shape, "unknown node " + std::to_string(id));
  return nodes_[id];
}

std::string Graph::describe(NodeId id) const {
  const Node& n = nodes_[id];
  std::string s = "node " + std::to_string(id) + " (" + op_name(n.op);
  if (!n.name.empty()) s += " '" + n.name + "'";
  return s + ")";
}

NodeId Graph::input(const std::string& name, Shape shape) {
  if (names_.count(name)) raise(ErrorKind::Shape, "duplicate leaf name '" + name + "'");
  Node n{Op::Input, {}, shape, 0.0, name, Tensor(shape)};
  NodeId id = push(std::move(n));
  names_[name] = id;
  return id;
}

NodeId Graph::param(const std::string& name, Shape shape) {
  if (names_.count(name)) raise(ErrorKind::Shape, "duplicate leaf name '" + name + "'");
  Node n{Op::Param, {}, shape, 0.0, name, Tensor(shape)};
  NodeId id = push(std::move(n));
  names_[name] = id;
  return id;
}

NodeId Graph::constant(Tensor value) {
  Shape s = value.shape();
  return push(Node{Op::Constant, {}, s, 0.0, {}, std::move(value)});
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Shape& sa = node(a).shape;
  const Shape& sb = node(b).shape;
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
    raise(ErrorKind::Shape, "matmul " + shape_str(sa) + " * " + shape_str(sb));
  return push(Node{Op::MatMul, {a, b}, Shape{sa[0], sb[1]}});
}

NodeId Graph::add_bias(NodeId x, NodeId b) {
  const Shape& sx = node(x).shape;
  const Shape& sb = node(b).shape;
  if (sx.size() != 2 || sb.size() != 1 || sx[1] != sb[0])
    raise(ErrorKind::Shape, "add_bias " + shape_str(sx) + " + " + shape_str(sb));
  return push(Node{Op::AddBias, {x, b}, sx});
}

NodeId Graph::add(NodeId a, NodeId b) {
  if (node(a).shape != node(b).shape)
    raise(ErrorKind::Shape, "add " + shape_str(node(a).shape) + " + " + shape_str(node(b).shape));
  return push(Node{Op::Add, {a, b}, node(a).shape});
}

NodeId Graph::sub(NodeId a, NodeId b) {
  if (node(a).shape != node(b).shape)
    raise(ErrorKind::Shape, "sub " + shape_str(node(a).shape) + " - " + shape_str(node(b).shape));
  return push(Node{Op::Sub, {a, b}, node(a).shape});
}

NodeId Graph::mul(NodeId a, NodeId b) {
  if (node(a).shape != node(b).shape)
    raise(ErrorKind::Shape, "mul " + shape_str(node(a).shape) + " * " + shape_str(node(b).shape));
  return push(Node{Op::Mul, {a, b}, node(a).shape});
}

NodeId Graph::relu(NodeId x) { return push(Node{Op::Relu, {x}, node(x).shape}); }

NodeId Graph::softmax_xent(NodeId logits, NodeId labels) {
  const Shape& sl = node(logits).shape;
  const Shape& sy = node(labels).shape;
  if (sl.size() != 2 || sy.size() != 1 || sy[0] != sl[0])
    raise(ErrorKind::Shape, "softmax_xent logits " + shape_str(sl) + " labels " + shape_str(sy));
  return push(Node{Op::SoftmaxXent, {logits, labels}, Shape{}});
}

NodeId Graph::square(NodeId x) { return push(Node{Op::Square, {x}, node(x).shape}); }
NodeId Graph::abs(NodeId x) { return push(Node{Op::Abs, {x}, node(x).shape}); }

NodeId Graph::power(NodeId x, double p) {
  if (!std::isfinite(p)) raise(ErrorKind::Domain, "power exponent must be finite");
  return push(Node{Op::Power, {x}, node(x).shape, p});
}

NodeId Graph::scale(NodeId x, double c) { return push(Node{Op::Scale, {x}, node(x).shape, c}); }
NodeId Graph::shift(NodeId x, double c) { return push(Node{Op::Shift, {x}, node(x).shape, c}); }
NodeId Graph::sum(NodeId x) { return push(Node{Op::Sum, {x}, Shape{}}); }
NodeId Graph::mean(NodeId x) { return push(Node{Op::Mean, {x}, Shape{}}); }

NodeId Graph::argmax(NodeId x) {
  const Shape& s = node(x).shape;
  if (s.size() != 2) raise(ErrorKind::Shape, "argmax expects a matrix, got " + shape_str(s));
  return push(Node{Op::Argmax, {x}, Shape{s[0]}});
}

void Graph::set_loss(NodeId id) {
  if (!node(id).shape.empty()) raise(ErrorKind::Shape, "loss must be a scalar, got " + shape_str(node(id).shape));
  loss_ = id;
}

NodeId Graph::loss() const {
  if (loss_ == kNone) raise(ErrorKind::State, "graph has no loss node");
  return loss_;
}

const Tensor& Graph::value(NodeId id) const { return node(id).value; }
const Shape& Graph::shape(NodeId id) const { return node(id).shape; }
Op Graph::op(NodeId id) const { return node(id).op; }

bool Graph::has_gradient(NodeId id) const { return id < has_grad_.size() && has_grad_[id]; }

const Tensor& Graph::gradient(NodeId id) const {
  if (!has_gradient(id)) raise(ErrorKind::State, describe(id) + " has no gradient");
  return grads_[id];
}

std::vector<std::string> Graph::param_names() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_)
    if (n.op == Op::Param) out.push_back(n.name);
  return out;
}

void Graph::eval(NodeId id) {
  Node& n = nodes_[id];
  auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.in[k]].value; };
  switch (n.op) {
    case Op::Input:
    case Op::Param:
    case Op::Constant:
      return;
    case Op::MatMul:
      n.value = blaq::matmul(in(0), in(1));
      break;
    case Op::AddBias: {
      const Tensor& x = in(0);
      const Tensor& b = in(1);
      n.value = x;
      std::size_t rows = x.dim(0), cols = x.dim(1);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) n.value.at(r, c) += b[c];
      break;
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      n.value = Tensor(n.shape);
      for (std::size_t i = 0; i < a.size(); ++i)
        n.value[i] = n.op == Op::Add ? a[i] + b[i] : n.op == Op::Sub ? a[i] - b[i] : a[i] * b[i];
      break;
    }
    case Op::Relu:
    case Op::Square:
    case Op::Abs:
    case Op::Power:
    case Op::Scale:
    case Op::Shift: {
      const Tensor& x = in(0);
      n.value = Tensor(n.shape);
      for (std::size_t i = 0; i < x.size(); ++i) {
        double v = x[i];
        switch (n.op) {
          case Op::Relu: v = v > 0.0 ? v : 0.0; break;
          case Op::Square: v = v * v; break;
          case Op::Abs: v = std::fabs(v); break;
          case Op::Power: v = sgn(v) * std::pow(std::fabs(v), n.attr); break;
          case Op::Scale: v = v * n.attr; break;
          default: v = v + n.attr; break;
        }
        n.value[i] = v;
      }
      break;
    }
    case Op::SoftmaxXent: {
      const Tensor& z = in(0);
      const Tensor& y = in(1);
      std::size_t rows = z.dim(0), cols = z.dim(1);
      n.aux = Tensor(z.shape());
      double total = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        double label = y[r];
        if (!(label >= 0.0 && label < static_cast<double>(cols)) || label != std::floor(label))
          raise(ErrorKind::Domain, describe(id) + ": label " + std::to_string(label) + " outside 0.." + std::to_string(cols - 1));
        double mx = z.at(r, 0);
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, z.at(r, c));
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += std::exp(z.at(r, c) - mx);
        double log_s = std::log(s);
        for (std::size_t c = 0; c < cols; ++c) n.aux.at(r, c) = std::exp(z.at(r, c) - mx - log_s);
        total += log_s + mx - z.at(r, static_cast<std::size_t>(label));
      }
      n.value = Tensor::scalar(total / static_cast<double>(rows));
      break;
    }
    case Op::Sum:
    case Op::Mean: {
      const Tensor& x = in(0);
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
      if (n.op == Op::Mean) s /= static_cast<double>(x.size());
      n.value = Tensor::scalar(s);
      break;
    }
    case Op::Argmax: {
      const Tensor& x = in(0);
      n.value = Tensor(n.shape);
      for (std::size_t r = 0; r < x.dim(0); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < x.dim(1); ++c)
          if (x.at(r, c) > x.at(r, best)) best = c;
        n.value[r] = static_cast<double>(best);
      }
      break;
    }
  }
  if (!n.value.all_finite()) raise(ErrorKind::Numeric, "non-finite value at " + describe(id));
}

double Graph::forward(const Bindings& bindings) {
  for (auto& [name, id] : names_) {
    auto it = bindings.find(name);
    if (it == bindings.end()) raise(ErrorKind::State, "leaf '" + name + "' is not bound");
    if (it->second.shape() != nodes_[id].shape)
      raise(ErrorKind::Shape, "leaf '" + name + "' expects " + shape_str(nodes_[id].shape) + ", got " + shape_str(it->second.shape()));
    nodes_[id].value = it->second;
  }
  for (auto& [name, t] : bindings)
    if (!names_.count(name)) raise(ErrorKind::Shape, "binding '" + name + "' does not name a leaf");
  for (NodeId id = 0; id < nodes_.size(); ++id) eval(id);
  forwarded_ = true;
  has_grad_.assign(nodes_.size(), 0);
  return loss_ == kNone ? 0.0 : nodes_[loss_].value.item();
}

void Graph::adjoint(NodeId id, std::vector<Tensor>& grads, const std::vector<char>& live) const {
  const Node& n = nodes_[id];
  const Tensor& dy = grads[id];
  auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.in[k]].value; };
  auto acc = [&](std::size_t k, const Tensor& g) {
    if (live[n.in[k]]) grads[n.in[k]] += g;
  };
  switch (n.op) {
    case Op::Input:
    case Op::Param:
    case Op::Constant:
      return;
    case Op::MatMul:
      if (live[n.in[0]]) acc(0, matmul_nt(dy, in(1)));
      if (live[n.in[1]]) acc(1, matmul_tn(in(0), dy));
      return;
    case Op::AddBias: {
      acc(0, dy);
      Tensor db(nodes_[n.in[1]].shape);
      for (std::size_t r = 0; r < dy.dim(0); ++r)
        for (std::size_t c = 0; c < dy.dim(1); ++c) db[c] += dy.at(r, c);
      acc(1, db);
      return;
    }
    case Op::Add:
      acc(0, dy);
      acc(1, dy);
      return;
    case Op::Sub: {
      acc(0, dy);
      Tensor neg = dy;
      for (auto& v : neg.values()) v = -v;
      acc(1, neg);
      return;
    }
    case Op::Mul: {
      Tensor da(n.shape), db(n.shape);
      for (std::size_t i = 0; i < dy.size(); ++i) {
        da[i] = dy[i] * in(1)[i];
        db[i] = dy[i] * in(0)[i];
      }
      acc(0, da);
      acc(1, db);
      return;
    }
    case Op::Relu:
    case Op::Square:
    case Op::Abs:
    case Op::Power:
    case Op::Scale:
    case Op::Shift: {
      const Tensor& x = in(0);
      Tensor dx(n.shape);
      for (std::size_t i = 0; i < x.size(); ++i) {
        double d = 1.0;
        switch (n.op) {
          case Op::Relu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
          case Op::Square: d = 2.0 * x[i]; break;
          case Op::Abs: d = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0); break;
          case Op::Power: d = n.attr * std::pow(std::fabs(x[i]), n.attr - 1.0); break;
          case Op::Scale: d = n.attr; break;
          default: break;
        }
        dx[i] = d * dy[i];
      }
      if (!dx.all_finite()) raise(ErrorKind::Numeric, "non-finite adjoint at " + describe(id));
      acc(0, dx);
      return;
    }
    case Op::SoftmaxXent: {
      const Tensor& y = in(1);
      Tensor dz = n.aux;
      std::size_t rows = dz.dim(0);
      for (std::size_t r = 0; r < rows; ++r) dz.at(r, static_cast<std::size_t>(y[r])) -= 1.0;
      double s = dy.item() / static_cast<double>(rows);
      for (auto& v : dz.values()) v *= s;
      acc(0, dz);
      return;
    }
    case Op::Sum:
    case Op::Mean: {
      const Shape& sx = nodes_[n.in[0]].shape;
      double v = dy.item();
      if (n.op == Op::Mean) v /= static_cast<double>(shape_size(sx));
      acc(0, Tensor(sx, v));
      return;
    }
    case Op::Argmax:
      break;
  }
  raise(ErrorKind::UnsupportedOp, std::string("no adjoint registered for ") + describe(id));
}

std::map<std::string, Tensor> Graph::backward() {
  if (!forwarded_) raise(ErrorKind::State, "backward called before forward");
  NodeId root = loss();
  // Nodes reachable from the loss, walking inputs backwards.
  std::vector<char> live(nodes_.size(), 0);
  live[root] = 1;
  for (NodeId id = root + 1; id-- > 0;)
    if (live[id])
      for (NodeId i : nodes_[id].in) live[i] = 1;
  grads_.assign(nodes_.size(), Tensor());
  for (NodeId id = 0; id <= root; ++id)
    if (live[id]) grads_[id] = Tensor(nodes_[id].shape);
  grads_[root] = Tensor::scalar(1.0);
  for (NodeId id = root + 1; id-- > 0;)
    if (live[id]) adjoint(id, grads_, live);
  has_grad_ = live;
  std::map<std::string, Tensor> out;
  for (NodeId id = 0; id < nodes_.size(); ++id)
    if (nodes_[id].op == Op::Param) out[nodes_[id].name] = live[id] ? grads_[id] : Tensor(nodes_[id].shape);
  return out;
}

}  // namespace blaq::ad
