#include "blaq/curvature.hpp"

#include <cmath>
#include <string>

#include "blaq/errors.hpp"

namespace blaq {

LrSchedule::LrSchedule(std::vector<Point> points) : points_(std::move(points)) {
  if (points_.empty() || points_.front().first != 0) raise(ErrorKind::Config, "learning-rate schedule must start at step 0");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(points_[i].second > 0.0) || !std::isfinite(points_[i].second))
      raise(ErrorKind::Config, "learning rate must be positive and finite");
    if (i > 0 && points_[i].first <= points_[i - 1].first)
      raise(ErrorKind::Config, "learning-rate schedule steps must be strictly increasing");
  }
}

double LrSchedule::at(std::uint64_t step) const {
  double eta = points_.front().second;
  for (const auto& [start, value] : points_) {
    if (start > step) break;
    eta = value;
  }
  return eta;
}

CurvatureState::CurvatureState(std::size_t dim, CurvatureConfig cfg, LrSchedule schedule)
    : cfg_(cfg), schedule_(std::move(schedule)), v_(dim, 0.0) {
  if (!(cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0)) raise(ErrorKind::Config, "beta2 must be in [0, 1)");
  if (!(cfg_.eps > 0.0) || !std::isfinite(cfg_.eps)) raise(ErrorKind::Config, "eps must be positive");
}

std::vector<double> CurvatureState::advance(std::span<const double> g, std::vector<double>& v, std::uint64_t step) const {
  if (g.size() != v.size())
    raise(ErrorKind::Shape, "curvature update: gradient has " + std::to_string(g.size()) + " entries, state has " +
                                std::to_string(v.size()));
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!std::isfinite(g[i])) raise(ErrorKind::Numeric, "curvature update: non-finite gradient at index " + std::to_string(i));
  const double eta = schedule_.at(step);
  std::vector<double> d(v.size());
  if (cfg_.kind == MetricKind::Identity) {
    for (auto& x : d) x = 1.0 / eta;
    return d;
  }
  const double b2 = cfg_.beta2;
  const double correction = 1.0 - std::pow(b2, static_cast<double>(step));
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    d[i] = (std::sqrt(v[i] / correction) + cfg_.eps) / eta;
  }
  return d;
}

std::vector<double> CurvatureState::update(std::span<const double> g) {
  std::vector<double> d = advance(g, v_, step_ + 1);
  ++step_;
  return d;
}

std::vector<double> CurvatureState::peek(std::span<const double> g) const {
  std::vector<double> v = v_;
  return advance(g, v, step_ + 1);
}

}  // namespace blaq
