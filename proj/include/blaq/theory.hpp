#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blaq/objectives.hpp"
#include "blaq/quantizer.hpp"

namespace blaq {

struct TheoryParams {
  double L1 = 1.0;
  double mu = 1.0;
  double eta = 1.0;
  double delta = 0.0;
  double a = 0.6;
};

// (L1 + L1^3 eta^2 - 2 mu^2 eta) / 2 * delta^2
double theorem1_bound(const TheoryParams& p);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty() const { return !(lo < hi); }
  bool contains(double x) const { return lo < x && x < hi; }
};

// Open interval (2 / (L1 eta) - 1, 1) of mixing coefficients.
Interval theorem2_region(double L1, double eta);

struct ComparisonResult {
  double loss_blaq = 0.0;
  double loss_laq = 0.0;
  std::size_t bound_checked = 0;
  std::size_t bound_skipped = 0;  // steps where the bound is not positive
  std::size_t bound_violations = 0;
};

// Runs LAQ and BLAQ with the fixed metric D = I / eta from the same start.
// Final losses are taken at the quantized iterates. The bound is checked on
// BLAQ's full-precision iterates with delta = |w^t - c|.
ComparisonResult compare_convergence(QuadraticObjective& objective, const QuantGrid& grid, double a, std::size_t steps,
                                     double eta, const Vec& w0, int m = 5);

struct TheorySuiteConfig {
  std::uint64_t seed = 7;
  std::size_t instances = 50;
  std::size_t dim = 8;
  std::size_t steps = 300;
  int bits = 1;
  int m = 5;
};

struct TheoryInstance {
  std::size_t index = 0;
  double L1 = 0.0;
  double mu = 0.0;
  double eta = 0.0;
  double a = 0.0;
  Interval region;
  bool skipped = false;
  std::string skip_reason;
  ComparisonResult result;
  bool blaq_wins = false;
};

struct TheorySuiteReport {
  std::vector<TheoryInstance> instances;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::size_t blaq_wins = 0;
  std::size_t instances_with_violations = 0;
  std::size_t total_violations = 0;
};

TheoryInstance run_theory_instance(std::size_t index, const Vec& lambda, const Vec& center, double eta, double a,
                                   const Vec& w0, const TheorySuiteConfig& cfg);
TheorySuiteReport run_theory_suite(const TheorySuiteConfig& cfg);

}  // namespace blaq
