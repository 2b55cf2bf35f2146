#include "blaq/objectives.hpp"

#include <algorithm>
#include <string>

#include "blaq/errors.hpp"

namespace blaq {

GraphObjective::GraphObjective(std::size_t dim) : dim_(dim) {
  if (dim == 0) raise(ErrorKind::Shape, "objective dimension must be positive");
  w_ = graph_.param("w", Shape{dim});
}

double GraphObjective::loss_at(const Vec& w) {
  if (w.size() != dim_) raise(ErrorKind::Shape, "objective expects " + std::to_string(dim_) + " weights");
  return graph_.forward({{"w", Tensor(Shape{dim_}, w)}});
}

double GraphObjective::do_evaluate(const std::vector<Vec>& weights, std::vector<Vec>& grads) {
  if (weights.size() != 1) raise(ErrorKind::Shape, "single-layer objective evaluated with " + std::to_string(weights.size()) + " layers");
  double loss = loss_at(weights[0]);
  auto g = graph_.backward();
  grads.assign(1, std::move(g.at("w").values()));
  return loss;
}

QuadraticObjective::QuadraticObjective(Vec lambda, Vec center)
    : GraphObjective(lambda.size()), lambda_(std::move(lambda)), center_(std::move(center)) {
  if (center_.size() != lambda_.size()) raise(ErrorKind::Shape, "quadratic: lambda and center differ in length");
  for (double l : lambda_)
    if (!(l > 0.0)) raise(ErrorKind::Domain, "quadratic: curvatures must be positive");
  const Shape s{lambda_.size()};
  auto diff = graph_.sub(w_, graph_.constant(Tensor(s, center_)));
  auto weighted = graph_.mul(graph_.constant(Tensor(s, lambda_)), graph_.square(diff));
  graph_.set_loss(graph_.scale(graph_.sum(weighted), 0.5));
}

double QuadraticObjective::L1() const { return *std::max_element(lambda_.begin(), lambda_.end()); }
double QuadraticObjective::mu() const { return *std::min_element(lambda_.begin(), lambda_.end()); }

PowObjective::PowObjective(std::size_t dim, double c) : GraphObjective(dim), c_(c) {
  if (!(c > 0.0)) raise(ErrorKind::Domain, "pow objective: c must be positive");
  graph_.set_loss(graph_.scale(graph_.sum(graph_.power(graph_.abs(w_), 1.5)), c_));
}

QuadraticObjective toy2d_objective() { return QuadraticObjective({10.0, 2.0}, {0.054, -0.055}); }

}  // namespace blaq
