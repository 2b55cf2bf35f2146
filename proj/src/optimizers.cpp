#include "blaq/optimizers.hpp"

#include <string>

#include "blaq/errors.hpp"

namespace blaq {

namespace {

ScaledCode sign_code(const Vec& w) {
  ScaledCode c;
  c.alpha = 1.0;
  c.beta.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) c.beta[i] = w[i] < 0.0 ? -1.0 : 1.0;
  return c;
}

std::vector<Vec> quantized_points(const std::vector<LayerQuantState>& layers) {
  std::vector<Vec> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(l.w_hat());
  return out;
}

double eval_checked(GradientOracle& oracle, const std::vector<Vec>& points, std::vector<Vec>& grads) {
  grads.assign(points.size(), Vec());
  double loss = oracle.evaluate(points, grads);
  for (std::size_t l = 0; l < points.size(); ++l)
    if (grads[l].size() != points[l].size())
      raise(ErrorKind::Shape, "gradient oracle returned " + std::to_string(grads[l].size()) + " entries for layer " +
                                  std::to_string(l) + " of size " + std::to_string(points[l].size()));
  return loss;
}

void check_config(const BlaqConfig& cfg) {
  if (!(cfg.a >= 0.0 && cfg.a <= 1.0)) raise(ErrorKind::Domain, "mixing coefficient a must lie in [0, 1]");
  if (cfg.m < 1) raise(ErrorKind::Domain, "alternating iteration count m must be >= 1");
}

Vec newton_point(const Vec& base, const Vec& g, const Vec& d) {
  Vec out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = base[i] - g[i] / d[i];
  return out;
}

}  // namespace

Vec LayerQuantState::w_hat() const { return projection == Projection::Identity ? w : code.values(); }

LayerQuantState make_layer(Vec w0, CurvatureState curvature, const BlaqConfig& cfg, Projection projection) {
  check_config(cfg);
  if (curvature.dim() != w0.size())
    raise(ErrorKind::Shape, "curvature state dimension " + std::to_string(curvature.dim()) + " does not match " +
                                std::to_string(w0.size()) + " weights");
  LayerQuantState s;
  s.projection = projection;
  s.g_hat.assign(w0.size(), 0.0);
  s.curvature = std::move(curvature);
  s.code = project_layer(s, w0, Vec(w0.size(), 1.0), cfg);
  s.w = std::move(w0);
  return s;
}

ScaledCode project_layer(const LayerQuantState& layer, const Vec& w, const Vec& d, const BlaqConfig& cfg) {
  if (layer.projection == Projection::Identity) return sign_code(w);
  return project(w, d, cfg.grid, cfg.m);
}

double laq_step(std::vector<LayerQuantState>& layers, GradientOracle& oracle, const BlaqConfig& cfg) {
  check_config(cfg);
  std::vector<Vec> points = quantized_points(layers);
  std::vector<Vec> grads;
  double loss = eval_checked(oracle, points, grads);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& s = layers[l];
    Vec d = s.curvature.update(grads[l]);
    Vec w_new = newton_point(points[l], grads[l], d);
    s.code = project_layer(s, w_new, d, cfg);
    s.w = std::move(w_new);
    s.g_hat = std::move(grads[l]);
    ++s.step;
  }
  return loss;
}

TrialState blaq_stage1(const std::vector<LayerQuantState>& layers, GradientOracle& oracle, const BlaqConfig& cfg) {
  check_config(cfg);
  TrialState t;
  t.step = layers.empty() ? 0 : layers.front().step;
  std::vector<Vec> points = quantized_points(layers);
  t.loss = eval_checked(oracle, points, t.g_current);

  std::vector<Vec> trial_points;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& s = layers[l];
    t.d_current.push_back(s.curvature.peek(t.g_current[l]));
    t.w_star.push_back(newton_point(s.w, t.g_current[l], t.d_current[l]));
    t.code_star.push_back(project_layer(s, t.w_star[l], t.d_current[l], cfg));
    trial_points.push_back(s.projection == Projection::Identity ? t.w_star[l] : t.code_star[l].values());
  }

  eval_checked(oracle, trial_points, t.g_star);
  for (std::size_t l = 0; l < layers.size(); ++l) t.d_star.push_back(layers[l].curvature.peek(t.g_star[l]));
  return t;
}

void blaq_stage2(std::vector<LayerQuantState>& layers, const TrialState& trial, const BlaqConfig& cfg) {
  check_config(cfg);
  if (trial.g_current.size() != layers.size()) raise(ErrorKind::State, "trial state was built for a different model");
  for (const auto& s : layers)
    if (s.step != trial.step)
      raise(ErrorKind::State, "stale trial: built at step " + std::to_string(trial.step) + ", layer is at step " +
                                  std::to_string(s.step));
  const double a = cfg.a;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& s = layers[l];
    const std::size_t n = s.dim();
    Vec g(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = a * trial.g_current[l][i] + (1.0 - a) * trial.g_star[l][i];
      d[i] = a * trial.d_current[l][i] + (1.0 - a) * trial.d_star[l][i];
    }
    s.curvature.update(g);
    Vec w_new = newton_point(s.w, g, d);
    s.code = project_layer(s, w_new, d, cfg);
    s.w = std::move(w_new);
    s.g_hat = std::move(g);
    ++s.step;
  }
}

double blaq_step(std::vector<LayerQuantState>& layers, GradientOracle& oracle, const BlaqConfig& cfg) {
  TrialState t = blaq_stage1(layers, oracle, cfg);
  blaq_stage2(layers, t, cfg);
  return t.loss;
}

double full_precision_step(std::vector<LayerQuantState>& layers, GradientOracle& oracle) {
  std::vector<Vec> points;
  for (const auto& s : layers) points.push_back(s.w);
  std::vector<Vec> grads;
  double loss = eval_checked(oracle, points, grads);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& s = layers[l];
    Vec d = s.curvature.update(grads[l]);
    s.w = newton_point(s.w, grads[l], d);
    s.code = sign_code(s.w);
    s.projection = Projection::Identity;
    s.g_hat = std::move(grads[l]);
    ++s.step;
  }
  return loss;
}

const char* optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::Laq: return "laq";
    case OptimizerKind::Blaq: return "blaq";
    case OptimizerKind::FullPrecision: return "full-precision";
  }
  return "?";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "laq") return OptimizerKind::Laq;
  if (name == "blaq") return OptimizerKind::Blaq;
  if (name == "full-precision" || name == "fp") return OptimizerKind::FullPrecision;
  raise(ErrorKind::Config, "unknown optimizer '" + name + "' (expected laq, blaq or full-precision)");
}

double optimizer_step(OptimizerKind kind, std::vector<LayerQuantState>& layers, GradientOracle& oracle,
                      const BlaqConfig& cfg) {
  switch (kind) {
    case OptimizerKind::Laq: return laq_step(layers, oracle, cfg);
    case OptimizerKind::Blaq: return blaq_step(layers, oracle, cfg);
    case OptimizerKind::FullPrecision: return full_precision_step(layers, oracle);
  }
  return 0.0;
}

}  // namespace blaq
