#include "blaq/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "blaq/errors.hpp"

namespace blaq {

namespace {

std::string wname(std::size_t l) { return "W" + std::to_string(l + 1); }
std::string bname(std::size_t l) { return "b" + std::to_string(l + 1); }

}  // namespace

MlpOracle::MlpOracle(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) raise(ErrorKind::Config, "network needs at least an input and an output width");
  for (auto s : sizes_)
    if (s == 0) raise(ErrorKind::Config, "layer widths must be positive");
}

std::vector<Shape> MlpOracle::param_shapes() const {
  std::vector<Shape> out;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    out.push_back(Shape{sizes_[l], sizes_[l + 1]});
    out.push_back(Shape{sizes_[l + 1]});
  }
  return out;
}

std::vector<Vec> MlpOracle::init_params(Rng& rng) const {
  std::vector<Vec> out;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const double lim = std::sqrt(6.0 / static_cast<double>(sizes_[l] + sizes_[l + 1]));
    Vec w(sizes_[l] * sizes_[l + 1]);
    for (auto& v : w) v = rng.uniform(-lim, lim);
    out.push_back(std::move(w));
    out.push_back(Vec(sizes_[l + 1], 0.0));
  }
  return out;
}

MlpOracle::Net& MlpOracle::net_for(std::size_t batch) {
  auto& slot = nets_[batch];
  if (slot) return *slot;
  slot = std::make_unique<Net>();
  ad::Graph& g = slot->graph;
  ad::NodeId h = g.input("x", Shape{batch, sizes_.front()});
  ad::NodeId y = g.input("labels", Shape{batch});
  for (std::size_t l = 0; l < num_layers(); ++l) {
    ad::NodeId w = g.param(wname(l), Shape{sizes_[l], sizes_[l + 1]});
    ad::NodeId b = g.param(bname(l), Shape{sizes_[l + 1]});
    h = g.add_bias(g.matmul(h, w), b);
    if (l + 1 < num_layers()) h = g.relu(h);
  }
  g.set_loss(g.softmax_xent(h, y));
  slot->prediction = g.argmax(h);
  return *slot;
}

ad::Bindings MlpOracle::bind(const std::vector<Vec>& params, const Tensor& x, const Tensor& labels) const {
  if (params.size() != 2 * num_layers())
    raise(ErrorKind::Shape, "network expects " + std::to_string(2 * num_layers()) + " parameter tensors, got " +
                                std::to_string(params.size()));
  auto shapes = param_shapes();
  ad::Bindings b;
  b.emplace("x", x);
  b.emplace("labels", labels);
  for (std::size_t l = 0; l < num_layers(); ++l) {
    b.emplace(wname(l), Tensor(shapes[2 * l], params[2 * l]));
    b.emplace(bname(l), Tensor(shapes[2 * l + 1], params[2 * l + 1]));
  }
  return b;
}

void MlpOracle::set_batch(Tensor x, Tensor labels) {
  if (x.rank() != 2 || x.dim(1) != sizes_.front() || labels.rank() != 1 || labels.dim(0) != x.dim(0))
    raise(ErrorKind::Shape, "batch " + shape_str(x.shape()) + " with labels " + shape_str(labels.shape()) +
                                " does not fit the network input");
  x_ = std::move(x);
  labels_ = std::move(labels);
}

double MlpOracle::do_evaluate(const std::vector<Vec>& weights, std::vector<Vec>& grads) {
  if (x_.rank() != 2) raise(ErrorKind::State, "no minibatch set");
  Net& net = net_for(x_.dim(0));
  double loss = net.graph.forward(bind(weights, x_, labels_));
  auto g = net.graph.backward();
  grads.clear();
  for (std::size_t l = 0; l < num_layers(); ++l) {
    grads.push_back(std::move(g.at(wname(l)).values()));
    grads.push_back(std::move(g.at(bname(l)).values()));
  }
  return loss;
}

double MlpOracle::accuracy(const std::vector<Vec>& params, const Tensor& x, const Tensor& labels, std::size_t chunk) {
  const std::size_t n = x.dim(0), in = x.dim(1);
  std::size_t correct = 0;
  for (std::size_t s = 0; s < n; s += chunk) {
    const std::size_t m = std::min(chunk, n - s);
    Tensor xb(Shape{m, in}, Vec(x.values().begin() + static_cast<std::ptrdiff_t>(s * in),
                                 x.values().begin() + static_cast<std::ptrdiff_t>((s + m) * in)));
    Tensor yb(Shape{m}, Vec(labels.values().begin() + static_cast<std::ptrdiff_t>(s),
                            labels.values().begin() + static_cast<std::ptrdiff_t>(s + m)));
    Net& net = net_for(m);
    net.graph.forward(bind(params, xb, yb));
    const Tensor& pred = net.graph.value(net.prediction);
    for (std::size_t i = 0; i < m; ++i)
      if (pred[i] == yb[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

Tensor mnist_images(const MnistSplit& split, const std::vector<std::size_t>& rows) {
  constexpr std::size_t kPixels = 28 * 28;
  Tensor x(Shape{rows.size(), kPixels});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::uint8_t* src = split.pixels.data() + rows[r] * kPixels;
    for (std::size_t c = 0; c < kPixels; ++c) x.at(r, c) = src[c] / 255.0;
  }
  return x;
}

Tensor mnist_labels(const MnistSplit& split, const std::vector<std::size_t>& rows) {
  Tensor y(Shape{rows.size()});
  for (std::size_t r = 0; r < rows.size(); ++r) y[r] = split.labels[rows[r]];
  return y;
}

}  // namespace blaq
