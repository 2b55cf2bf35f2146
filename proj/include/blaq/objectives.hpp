#pragma once

#include "blaq/autodiff.hpp"
#include "blaq/optimizers.hpp"

namespace blaq {

// Single-layer objective backed by an autodiff graph with one parameter "w".
class GraphObjective : public GradientOracle {
 public:
  std::size_t dim() const { return dim_; }
  // Loss only. Not counted as a gradient evaluation.
  double loss_at(const Vec& w);

 protected:
  explicit GraphObjective(std::size_t dim);
  double do_evaluate(const std::vector<Vec>& weights, std::vector<Vec>& grads) override;

  ad::Graph graph_;
  ad::NodeId w_ = 0;

 private:
  std::size_t dim_;
};

// 0.5 * sum lambda_i (w_i - c_i)^2
class QuadraticObjective : public GraphObjective {
 public:
  QuadraticObjective(Vec lambda, Vec center);

  const Vec& lambda() const { return lambda_; }
  const Vec& center() const { return center_; }
  double L1() const;
  double mu() const;

 private:
  Vec lambda_;
  Vec center_;
};

// c * sum |w_i|^(3/2)
class PowObjective : public GraphObjective {
 public:
  PowObjective(std::size_t dim, double c);

 private:
  double c_;
};

// 5 (w1 - 0.054)^2 + (w2 + 0.055)^2
QuadraticObjective toy2d_objective();

}  // namespace blaq
