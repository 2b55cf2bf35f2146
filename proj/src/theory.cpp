#include "blaq/theory.hpp"

#include <cmath>

#include "blaq/errors.hpp"
#include "blaq/rng.hpp"

namespace blaq {

double theorem1_bound(const TheoryParams& p) {
  const double L = p.L1, e = p.eta;
  return (L + L * L * L * e * e - 2.0 * p.mu * p.mu * e) / 2.0 * p.delta * p.delta;
}

Interval theorem2_region(double L1, double eta) {
  if (!(L1 > 0.0) || !(eta > 0.0)) raise(ErrorKind::Domain, "theorem2_region: L1 and eta must be positive");
  return Interval{2.0 / (L1 * eta) - 1.0, 1.0};
}

namespace {

std::vector<LayerQuantState> fixed_metric_model(const Vec& w0, double eta, const BlaqConfig& cfg) {
  CurvatureConfig cc;
  cc.kind = MetricKind::Identity;
  std::vector<LayerQuantState> layers;
  layers.push_back(make_layer(w0, CurvatureState(w0.size(), cc, LrSchedule::constant(eta)), cfg));
  return layers;
}

double distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

ComparisonResult compare_convergence(QuadraticObjective& objective, const QuantGrid& grid, double a, std::size_t steps,
                                     double eta, const Vec& w0, int m) {
  if (w0.size() != objective.dim()) raise(ErrorKind::Shape, "compare_convergence: start point has wrong dimension");
  BlaqConfig cfg{a, m, grid};
  ComparisonResult r;

  auto laq = fixed_metric_model(w0, eta, cfg);
  for (std::size_t t = 0; t < steps; ++t) laq_step(laq, objective, cfg);
  r.loss_laq = objective.loss_at(laq[0].w_hat());

  TheoryParams p{objective.L1(), objective.mu(), eta, 0.0, a};
  const Vec& c = objective.center();
  auto blaq = fixed_metric_model(w0, eta, cfg);
  for (std::size_t t = 0; t < steps; ++t) {
    p.delta = distance(blaq[0].w, c);
    blaq_step(blaq, objective, cfg);
    const double bound = theorem1_bound(p);
    if (!(bound > 0.0)) {
      ++r.bound_skipped;
      continue;
    }
    ++r.bound_checked;
    // The unconstrained minimizer c has loss 0.
    const double gap = objective.loss_at(blaq[0].w);
    if (gap > bound * (1.0 + 1e-12)) ++r.bound_violations;
  }
  r.loss_blaq = objective.loss_at(blaq[0].w_hat());
  return r;
}

TheoryInstance run_theory_instance(std::size_t index, const Vec& lambda, const Vec& center, double eta, double a,
                                   const Vec& w0, const TheorySuiteConfig& cfg) {
  QuadraticObjective obj(lambda, center);
  TheoryInstance inst;
  inst.index = index;
  inst.L1 = obj.L1();
  inst.mu = obj.mu();
  inst.eta = eta;
  inst.a = a;
  inst.region = theorem2_region(inst.L1, eta);
  if (inst.region.empty()) {
    inst.skipped = true;
    inst.skip_reason = "empty mixing region (L1 * eta <= 1)";
    return inst;
  }
  if (!inst.region.contains(a)) {
    inst.skipped = true;
    inst.skip_reason = "mixing coefficient outside region";
    return inst;
  }
  inst.result = compare_convergence(obj, QuantGrid(cfg.bits), a, cfg.steps, eta, w0, cfg.m);
  inst.blaq_wins = inst.result.loss_blaq <= inst.result.loss_laq + 1e-9;
  return inst;
}

TheorySuiteReport run_theory_suite(const TheorySuiteConfig& cfg) {
  if (cfg.dim < 2) raise(ErrorKind::Config, "theory suite dimension must be at least 2");
  Rng rng(cfg.seed);
  const QuantGrid grid(cfg.bits);
  TheorySuiteReport rep;
  for (std::size_t k = 0; k < cfg.instances; ++k) {
    const double mu = rng.uniform(0.5, 2.0);
    const double L1 = mu * rng.uniform(2.0, 10.0);
    Vec lambda(cfg.dim), center(cfg.dim), w0(cfg.dim);
    for (auto& l : lambda) l = std::exp(rng.uniform(std::log(mu), std::log(L1)));
    lambda.front() = mu;
    lambda.back() = L1;
    // Minimizers sit on scaled grid codes, so the quantized problem is realizable.
    const double scale = rng.uniform(0.2, 1.0);
    for (auto& c : center) c = scale * grid.levels()[rng.below(grid.levels().size())];
    const double eta = rng.uniform(1.0 / L1, 2.0 / L1);
    const Interval region = theorem2_region(L1, eta);
    const double a = rng.uniform(std::max(region.lo, 0.0), 1.0);
    for (auto& w : w0) w = rng.normal();

    TheoryInstance inst = run_theory_instance(k, lambda, center, eta, a, w0, cfg);
    if (inst.skipped) {
      ++rep.skipped;
    } else {
      ++rep.evaluated;
      if (inst.blaq_wins) ++rep.blaq_wins;
      if (inst.result.bound_violations > 0) ++rep.instances_with_violations;
      rep.total_violations += inst.result.bound_violations;
    }
    rep.instances.push_back(std::move(inst));
  }
  return rep;
}

}  // namespace blaq
