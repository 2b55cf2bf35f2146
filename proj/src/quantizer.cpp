#include "blaq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "blaq/errors.hpp"

namespace blaq {

QuantGrid::QuantGrid(int bits) : bits_(bits) {
  if (bits < 1 || bits > kMaxBits)
    raise(ErrorKind::Domain, "bitwidth must be in 1.." + std::to_string(kMaxBits) + ", got " + std::to_string(bits));
  half_ = 1 << (bits - 1);
  levels_.reserve(2 * static_cast<std::size_t>(half_));
  for (int i = half_; i >= 1; --i) levels_.push_back(-static_cast<double>(i) / half_);
  for (int i = 1; i <= half_; ++i) levels_.push_back(static_cast<double>(i) / half_);
}

double QuantGrid::nearest(double x) const {
  double h = half_;
  double i = std::floor(std::fabs(x) * h + 0.5);
  i = std::clamp(i, 1.0, h);
  return (x < 0.0 ? -i : i) / h;
}

bool QuantGrid::contains(double v) const { return std::binary_search(levels_.begin(), levels_.end(), v); }

std::vector<double> ScaledCode::values() const {
  std::vector<double> out(beta.size());
  for (std::size_t i = 0; i < beta.size(); ++i) out[i] = alpha * beta[i];
  return out;
}

double weighted_objective(std::span<const double> w, std::span<const double> d, const ScaledCode& code) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double r = w[i] - code.alpha * code.beta[i];
    s += d[i] * r * r;
  }
  return 0.5 * s;
}

namespace {

void check_inputs(std::span<const double> w, std::span<const double> d, int m) {
  if (w.size() != d.size())
    raise(ErrorKind::Shape, "project: w has " + std::to_string(w.size()) + " entries, d has " + std::to_string(d.size()));
  if (m < 1) raise(ErrorKind::Domain, "project: iteration count must be >= 1");
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i])) raise(ErrorKind::Numeric, "project: non-finite weight at index " + std::to_string(i));
    if (!(d[i] > 0.0) || !std::isfinite(d[i]))
      raise(ErrorKind::Domain, "project: metric entry " + std::to_string(i) + " must be positive and finite");
  }
}

double optimal_alpha(std::span<const double> w, std::span<const double> d, const std::vector<double>& beta) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    num += d[i] * w[i] * beta[i];
    den += d[i] * beta[i] * beta[i];
  }
  double a = num / den;
  return a > 0.0 ? a : kZeroAlpha;
}

// Walk alpha from +inf down to 0. Each coordinate's level index grows by one
// at alpha = |w_i| h / (j + 0.5); between breakpoints the code is fixed and its
// best alpha has objective 0.5 (sum d w^2 - S1^2 / S2).
ScaledCode breakpoint_sweep(std::span<const double> w, std::span<const double> d, const QuantGrid& grid) {
  const int h = grid.half();
  const double hd = h;
  struct Break {
    double alpha;
    std::size_t i;
  };
  std::vector<Break> breaks;
  breaks.reserve(w.size() * static_cast<std::size_t>(h - 1));
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double aw = std::fabs(w[i]);
    s1 += d[i] * aw / hd;
    s2 += d[i] / (hd * hd);
    if (aw > 0.0)
      for (int j = 1; j < h; ++j) breaks.push_back({aw * hd / (j + 0.5), i});
  }
  std::stable_sort(breaks.begin(), breaks.end(), [](const Break& x, const Break& y) { return x.alpha > y.alpha; });

  std::vector<int> idx(w.size(), 1);
  double best = s1 * s1 / s2;
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < breaks.size();) {
    std::size_t e = k;
    while (e < breaks.size() && breaks[e].alpha == breaks[k].alpha) {
      std::size_t i = breaks[e].i;
      int j = idx[i];
      s1 += d[i] * std::fabs(w[i]) / hd;
      s2 += d[i] * (2.0 * j + 1.0) / (hd * hd);
      idx[i] = j + 1;
      ++e;
    }
    double v = s1 * s1 / s2;
    if (v > best) {
      best = v;
      best_k = e;
    }
    k = e;
  }

  std::fill(idx.begin(), idx.end(), 1);
  for (std::size_t k = 0; k < best_k; ++k) ++idx[breaks[k].i];
  ScaledCode code;
  code.beta.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) code.beta[i] = (w[i] < 0.0 ? -idx[i] : idx[i]) / hd;
  code.alpha = optimal_alpha(w, d, code.beta);
  return code;
}

}  // namespace

ScaledCode project(std::span<const double> w, std::span<const double> d, const QuantGrid& grid,
                   const ProjectOptions& opts, std::vector<double>* trace) {
  check_inputs(w, d, opts.m);
  const std::size_t n = w.size();
  ScaledCode code;
  code.beta.assign(n, 1.0);
  if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) {
    code.alpha = kZeroAlpha;
    if (trace) trace->push_back(weighted_objective(w, d, code));
    return code;
  }

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += d[i] * std::fabs(w[i]);
    den += d[i];
  }
  code.alpha = num / den;
  for (int it = 0; it < opts.m; ++it) {
    for (std::size_t i = 0; i < n; ++i) code.beta[i] = grid.nearest(w[i] / code.alpha);
    if (trace) trace->push_back(weighted_objective(w, d, code));
    code.alpha = optimal_alpha(w, d, code.beta);
    if (trace) trace->push_back(weighted_objective(w, d, code));
  }

  if (opts.exact_sweep && grid.bits() > 1) {
    ScaledCode swept = breakpoint_sweep(w, d, grid);
    if (weighted_objective(w, d, swept) < weighted_objective(w, d, code)) code = std::move(swept);
    if (trace) trace->push_back(weighted_objective(w, d, code));
  }
  return code;
}

ScaledCode project(std::span<const double> w, std::span<const double> d, const QuantGrid& grid, int m) {
  ProjectOptions opts;
  opts.m = m;
  return project(w, d, grid, opts);
}

}  // namespace blaq
