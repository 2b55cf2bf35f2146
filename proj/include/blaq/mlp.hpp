#pragma once

#include <map>
#include <memory>
#include <vector>

#include "blaq/autodiff.hpp"
#include "blaq/mnist.hpp"
#include "blaq/optimizers.hpp"
#include "blaq/rng.hpp"

namespace blaq {

// Fully connected relu network ending in softmax cross-entropy.
// Parameter order is W1, b1, W2, b2, ...; W_l is (in x out) row-major.
class MlpOracle : public GradientOracle {
 public:
  explicit MlpOracle(std::vector<std::size_t> sizes);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::vector<Shape> param_shapes() const;
  static bool is_weight(std::size_t param_index) { return param_index % 2 == 0; }

  // Glorot-uniform weights, zero biases.
  std::vector<Vec> init_params(Rng& rng) const;

  // x: (batch x inputs), labels: (batch). Stays fixed until the next call.
  void set_batch(Tensor x, Tensor labels);

  // Fraction of correct argmax predictions, evaluated in chunks.
  double accuracy(const std::vector<Vec>& params, const Tensor& x, const Tensor& labels, std::size_t chunk = 1000);

 protected:
  double do_evaluate(const std::vector<Vec>& weights, std::vector<Vec>& grads) override;

 private:
  struct Net {
    ad::Graph graph;
    ad::NodeId prediction = 0;
  };
  Net& net_for(std::size_t batch);
  ad::Bindings bind(const std::vector<Vec>& params, const Tensor& x, const Tensor& labels) const;

  std::vector<std::size_t> sizes_;
  std::map<std::size_t, std::unique_ptr<Net>> nets_;
  Tensor x_;
  Tensor labels_;
};

// Selected rows of a split, pixels scaled to [0, 1].
Tensor mnist_images(const MnistSplit& split, const std::vector<std::size_t>& rows);
Tensor mnist_labels(const MnistSplit& split, const std::vector<std::size_t>& rows);

}  // namespace blaq
