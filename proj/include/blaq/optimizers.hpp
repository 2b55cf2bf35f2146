#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blaq/curvature.hpp"
#include "blaq/quantizer.hpp"

namespace blaq {

using Vec = std::vector<double>;

// Loss and per-layer gradients at a point. Both evaluations of one BLAQ step
// must see the same data, so minibatch oracles only change batch between steps.
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;

  double evaluate(const std::vector<Vec>& weights, std::vector<Vec>& grads) {
    ++calls_;
    return do_evaluate(weights, grads);
  }
  std::uint64_t calls() const { return calls_; }

 protected:
  virtual double do_evaluate(const std::vector<Vec>& weights, std::vector<Vec>& grads) = 0;

 private:
  std::uint64_t calls_ = 0;
};

enum class Projection {
  Grid,      // w_hat = alpha * beta
  Identity,  // w_hat = w; beta carries sign(w) for flip statistics
};

struct LayerQuantState {
  Vec w;
  ScaledCode code;
  Vec g_hat;
  CurvatureState curvature;
  Projection projection = Projection::Grid;
  std::uint64_t step = 0;

  std::size_t dim() const { return w.size(); }
  Vec w_hat() const;
};

struct BlaqConfig {
  double a = 0.6;
  int m = 5;
  QuantGrid grid{1};
};

// Initial code is the unweighted projection of w0.
LayerQuantState make_layer(Vec w0, CurvatureState curvature, const BlaqConfig& cfg,
                           Projection projection = Projection::Grid);

ScaledCode project_layer(const LayerQuantState& layer, const Vec& w, const Vec& d, const BlaqConfig& cfg);

struct TrialState {
  std::uint64_t step = 0;
  double loss = 0.0;            // at w_hat^t
  std::vector<Vec> g_current;   // g^t
  std::vector<Vec> d_current;   // D^t
  std::vector<Vec> w_star;
  std::vector<ScaledCode> code_star;
  std::vector<Vec> g_star;
  std::vector<Vec> d_star;
};

// Each step returns the loss at the quantized point it started from.
double laq_step(std::vector<LayerQuantState>& layers, GradientOracle& oracle, const BlaqConfig& cfg);
TrialState blaq_stage1(const std::vector<LayerQuantState>& layers, GradientOracle& oracle, const BlaqConfig& cfg);
void blaq_stage2(std::vector<LayerQuantState>& layers, const TrialState& trial, const BlaqConfig& cfg);
double blaq_step(std::vector<LayerQuantState>& layers, GradientOracle& oracle, const BlaqConfig& cfg);
double full_precision_step(std::vector<LayerQuantState>& layers, GradientOracle& oracle);

enum class OptimizerKind { Laq, Blaq, FullPrecision };

const char* optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);
double optimizer_step(OptimizerKind kind, std::vector<LayerQuantState>& layers, GradientOracle& oracle,
                      const BlaqConfig& cfg);

}  // namespace blaq
