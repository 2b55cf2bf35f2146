#pragma once

#include <span>
#include <vector>

namespace blaq {

// Symmetric fixed-point levels {±i/2^(k-1) : i = 1..2^(k-1)}. No zero level.
class QuantGrid {
 public:
  explicit QuantGrid(int bits = 1);

  int bits() const { return bits_; }
  int half() const { return half_; }
  const std::vector<double>& levels() const { return levels_; }

  // Closest level; ties go away from zero, |x| > 1 clamps, sign(0) = +1.
  double nearest(double x) const;
  bool contains(double v) const;

 private:
  int bits_;
  int half_;
  std::vector<double> levels_;
};

struct ScaledCode {
  double alpha = 1.0;
  std::vector<double> beta;

  std::vector<double> values() const;
};

inline constexpr double kZeroAlpha = 1e-8;
inline constexpr int kMaxBits = 16;

// 0.5 * sum d_i (w_i - alpha * beta_i)^2
double weighted_objective(std::span<const double> w, std::span<const double> d, const ScaledCode& code);

struct ProjectOptions {
  int m = 5;
  // After the alternating iterations, sweep the breakpoints of beta(alpha)
  // and keep the best code. Only changes anything for k >= 2.
  bool exact_sweep = true;
};

// argmin over alpha > 0 and beta in the grid of the d-weighted squared error.
// When trace is given it receives the objective after every half-step.
ScaledCode project(std::span<const double> w, std::span<const double> d, const QuantGrid& grid,
                   const ProjectOptions& opts, std::vector<double>* trace = nullptr);
ScaledCode project(std::span<const double> w, std::span<const double> d, const QuantGrid& grid, int m);

}  // namespace blaq
