#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace blaq {

// Piecewise-constant learning rate. Each point (start, eta) applies from
// step `start` until the next point. The first point must start at 0.
class LrSchedule {
 public:
  using Point = std::pair<std::uint64_t, double>;

  LrSchedule() : LrSchedule(std::vector<Point>{{0, 0.01}}) {}
  explicit LrSchedule(std::vector<Point> points);
  static LrSchedule constant(double eta) { return LrSchedule(std::vector<Point>{{0, eta}}); }

  double at(std::uint64_t step) const;
  const std::vector<Point>& points() const { return points_; }

 private:
  std::vector<Point> points_;
};

enum class MetricKind {
  Adaptive,  // bias-corrected root second moment over eta
  Identity,  // D = 1 / eta
};

struct CurvatureConfig {
  double beta2 = 0.999;
  double eps = 1e-8;
  MetricKind kind = MetricKind::Adaptive;
};

class CurvatureState {
 public:
  CurvatureState() = default;
  CurvatureState(std::size_t dim, CurvatureConfig cfg, LrSchedule schedule);

  // Fold g into the running moment, advance the step, return D.
  std::vector<double> update(std::span<const double> g);
  // What update(g) would return, without touching the state.
  std::vector<double> peek(std::span<const double> g) const;

  std::size_t dim() const { return v_.size(); }
  std::uint64_t step() const { return step_; }
  const std::vector<double>& v() const { return v_; }
  const CurvatureConfig& config() const { return cfg_; }
  const LrSchedule& schedule() const { return schedule_; }

 private:
  std::vector<double> advance(std::span<const double> g, std::vector<double>& v, std::uint64_t step) const;

  CurvatureConfig cfg_;
  LrSchedule schedule_;
  std::vector<double> v_;
  std::uint64_t step_ = 0;
};

}  // namespace blaq
