#include "blaq/blaq.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "blaq/config.hpp"
#include "blaq/errors.hpp"
#include "blaq/experiments.hpp"
#include "blaq/optimizers.hpp"
#include "blaq/quantizer.hpp"
#include "blaq/theory.hpp"

struct blaq_run {
  blaq::ExperimentConfig cfg;
  bool executed = false;
  blaq::RunSummary summary;
};

namespace {

// Adapts a C callback to the oracle interface.
class CallbackOracle : public blaq::GradientOracle {
 public:
  CallbackOracle(blaq_gradient_fn fn, void* user) : fn_(fn), user_(user) {}

 protected:
  double do_evaluate(const std::vector<blaq::Vec>& weights, std::vector<blaq::Vec>& grads) override {
    grads.assign(1, blaq::Vec(weights[0].size(), 0.0));
    double loss = fn_(weights[0].data(), grads[0].data(), weights[0].size(), user_);
    if (!std::isfinite(loss)) blaq::raise(blaq::ErrorKind::Numeric, "gradient callback returned a non-finite loss");
    return loss;
  }

 private:
  blaq_gradient_fn fn_;
  void* user_;
};

}  // namespace

struct blaq_layer {
  std::vector<blaq::LayerQuantState> layers;
  blaq::OptimizerKind optimizer;
  blaq::BlaqConfig cfg;
  unsigned long long calls = 0;
};

namespace {

thread_local std::string g_last_error;

blaq_status status_of(blaq::ErrorKind kind) {
  switch (kind) {
    case blaq::ErrorKind::Shape: return BLAQ_ERR_SHAPE;
    case blaq::ErrorKind::Numeric: return BLAQ_ERR_NUMERIC;
    case blaq::ErrorKind::State: return BLAQ_ERR_STATE;
    case blaq::ErrorKind::Domain: return BLAQ_ERR_DOMAIN;
    case blaq::ErrorKind::UnsupportedOp: return BLAQ_ERR_UNSUPPORTED;
    case blaq::ErrorKind::Config: return BLAQ_ERR_CONFIG;
    case blaq::ErrorKind::Format: return BLAQ_ERR_FORMAT;
    case blaq::ErrorKind::Io: return BLAQ_ERR_IO;
  }
  return BLAQ_ERR_INTERNAL;
}

blaq_status fail(blaq_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
blaq_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const blaq::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(BLAQ_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(BLAQ_ERR_INTERNAL, e.what());
  }
}

blaq_status copy_out(const std::string& text, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = text.size() + 1;
  if (!buf) return BLAQ_OK;
  if (cap < text.size() + 1) return fail(BLAQ_ERR_BUFFER_TOO_SMALL, "buffer holds " + std::to_string(cap) + " bytes, need " +
                                                                        std::to_string(text.size() + 1));
  std::memcpy(buf, text.c_str(), text.size() + 1);
  return BLAQ_OK;
}

}  // namespace

extern "C" {

const char* blaq_version(void) { return "0.1.0"; }

const char* blaq_status_name(blaq_status status) {
  switch (status) {
    case BLAQ_OK: return "ok";
    case BLAQ_ERR_INVALID_ARGUMENT: return "invalid argument";
    case BLAQ_ERR_CONFIG: return "config error";
    case BLAQ_ERR_FORMAT: return "format error";
    case BLAQ_ERR_IO: return "io error";
    case BLAQ_ERR_SHAPE: return "shape error";
    case BLAQ_ERR_NUMERIC: return "numeric error";
    case BLAQ_ERR_STATE: return "state error";
    case BLAQ_ERR_DOMAIN: return "domain error";
    case BLAQ_ERR_UNSUPPORTED: return "unsupported op";
    case BLAQ_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case BLAQ_ERR_NOT_FOUND: return "not found";
    case BLAQ_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* blaq_last_error(void) { return g_last_error.c_str(); }

blaq_status blaq_run_create(const char* experiment, blaq_run** out) {
  if (!experiment || !out) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto* run = new blaq_run;
    run->cfg = blaq::default_config(blaq::parse_experiment(experiment));
    *out = run;
    return BLAQ_OK;
  });
}

void blaq_run_destroy(blaq_run* run) { delete run; }

blaq_status blaq_run_load_config(blaq_run* run, const char* path) {
  if (!run || !path) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    blaq::load_config_file(run->cfg, path);
    return BLAQ_OK;
  });
}

blaq_status blaq_run_set(blaq_run* run, const char* key, const char* value) {
  if (!run || !key || !value) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    blaq::apply_override(run->cfg, key, value);
    return BLAQ_OK;
  });
}

blaq_status blaq_run_execute(blaq_run* run) {
  if (!run) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    run->executed = false;
    run->summary = blaq::run_experiment(run->cfg);
    run->executed = true;
    return BLAQ_OK;
  });
}

blaq_status blaq_run_config_json(const blaq_run* run, char* buf, size_t cap, size_t* needed) {
  if (!run) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { return copy_out(blaq::config_to_json(run->cfg), buf, cap, needed); });
}

blaq_status blaq_run_metrics_json(const blaq_run* run, char* buf, size_t cap, size_t* needed) {
  if (!run) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null argument");
  if (!run->executed) return fail(BLAQ_ERR_STATE, "run has not been executed");
  return copy_out(run->summary.metrics_json, buf, cap, needed);
}

blaq_status blaq_run_check_count(const blaq_run* run, size_t* total, size_t* failed) {
  if (!run) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null argument");
  if (!run->executed) return fail(BLAQ_ERR_STATE, "run has not been executed");
  size_t bad = 0;
  for (const auto& c : run->summary.checks)
    if (!c.passed) ++bad;
  if (total) *total = run->summary.checks.size();
  if (failed) *failed = bad;
  return BLAQ_OK;
}

blaq_status blaq_run_verdict(const blaq_run* run, int* ok) {
  if (!run || !ok) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null argument");
  if (!run->executed) return fail(BLAQ_ERR_STATE, "run has not been executed");
  *ok = (!run->cfg.strict || run->summary.passed()) ? 1 : 0;
  return BLAQ_OK;
}

blaq_status blaq_run_check(const blaq_run* run, size_t index, const char** name, int* passed, const char** detail) {
  if (!run) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null argument");
  if (!run->executed) return fail(BLAQ_ERR_STATE, "run has not been executed");
  if (index >= run->summary.checks.size()) return fail(BLAQ_ERR_NOT_FOUND, "check index out of range");
  const auto& c = run->summary.checks[index];
  if (name) *name = c.name.c_str();
  if (passed) *passed = c.passed ? 1 : 0;
  if (detail) *detail = c.detail.c_str();
  return BLAQ_OK;
}

blaq_status blaq_run_metric(const blaq_run* run, const char* name, double* out) {
  if (!run || !name || !out) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null argument");
  if (!run->executed) return fail(BLAQ_ERR_STATE, "run has not been executed");
  auto it = run->summary.scalars.find(name);
  if (it == run->summary.scalars.end()) return fail(BLAQ_ERR_NOT_FOUND, std::string("no metric named '") + name + "'");
  *out = it->second;
  return BLAQ_OK;
}

blaq_status blaq_project(const double* w, const double* d, size_t n, int bits, int m, double* alpha, double* beta) {
  if (!w || !d || !alpha || !beta || n == 0) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null or empty argument");
  return guarded([&] {
    blaq::ScaledCode c = blaq::project({w, n}, {d, n}, blaq::QuantGrid(bits), m);
    *alpha = c.alpha;
    std::copy(c.beta.begin(), c.beta.end(), beta);
    return BLAQ_OK;
  });
}

double blaq_nearest_level(int bits, double x) {
  try {
    return blaq::QuantGrid(bits).nearest(x);
  } catch (const blaq::Error& e) {
    g_last_error = e.what();
    return NAN;
  }
}

double blaq_theorem1_bound(double L1, double mu, double eta, double delta) {
  return blaq::theorem1_bound(blaq::TheoryParams{L1, mu, eta, delta, 0.0});
}

blaq_status blaq_theorem2_region(double L1, double eta, double* lo, double* hi, int* empty) {
  return guarded([&] {
    blaq::Interval r = blaq::theorem2_region(L1, eta);
    if (lo) *lo = r.lo;
    if (hi) *hi = r.hi;
    if (empty) *empty = r.empty() ? 1 : 0;
    return BLAQ_OK;
  });
}

void blaq_layer_options_default(blaq_layer_options* opts) {
  if (!opts) return;
  opts->bits = 1;
  opts->m = 5;
  opts->a = 0.6;
  opts->eta = 0.01;
  opts->beta2 = 0.999;
  opts->eps = 1e-8;
  opts->identity_metric = 0;
}

blaq_status blaq_layer_create(const double* w0, size_t n, blaq_optimizer optimizer, const blaq_layer_options* opts,
                              blaq_layer** out) {
  if (!w0 || !out || n == 0) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null or empty argument");
  if (optimizer < BLAQ_OPT_LAQ || optimizer > BLAQ_OPT_FULL_PRECISION) return fail(BLAQ_ERR_INVALID_ARGUMENT, "unknown optimizer");
  blaq_layer_options o;
  blaq_layer_options_default(&o);
  if (opts) o = *opts;
  return guarded([&] {
    auto layer = std::make_unique<blaq_layer>();
    layer->optimizer = static_cast<blaq::OptimizerKind>(optimizer);
    layer->cfg = blaq::BlaqConfig{o.a, o.m, blaq::QuantGrid(o.bits)};
    blaq::CurvatureConfig cc;
    cc.beta2 = o.beta2;
    cc.eps = o.eps;
    cc.kind = o.identity_metric ? blaq::MetricKind::Identity : blaq::MetricKind::Adaptive;
    blaq::Vec w(w0, w0 + n);
    for (double x : w)
      if (!std::isfinite(x)) blaq::raise(blaq::ErrorKind::Numeric, "non-finite initial weight");
    auto proj = layer->optimizer == blaq::OptimizerKind::FullPrecision ? blaq::Projection::Identity : blaq::Projection::Grid;
    layer->layers.push_back(
        blaq::make_layer(std::move(w), blaq::CurvatureState(n, cc, blaq::LrSchedule::constant(o.eta)), layer->cfg, proj));
    *out = layer.release();
    return BLAQ_OK;
  });
}

void blaq_layer_destroy(blaq_layer* layer) { delete layer; }

size_t blaq_layer_dim(const blaq_layer* layer) { return layer ? layer->layers[0].dim() : 0; }

blaq_status blaq_layer_step(blaq_layer* layer, blaq_gradient_fn fn, void* user, double* loss) {
  if (!layer || !fn) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    CallbackOracle oracle(fn, user);
    auto backup = layer->layers;
    try {
      double l = blaq::optimizer_step(layer->optimizer, layer->layers, oracle, layer->cfg);
      if (loss) *loss = l;
    } catch (...) {
      layer->layers = std::move(backup);
      layer->calls += oracle.calls();
      throw;
    }
    layer->calls += oracle.calls();
    return BLAQ_OK;
  });
}

blaq_status blaq_layer_state(const blaq_layer* layer, double* w, double* w_hat, double* alpha) {
  if (!layer) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null argument");
  const auto& s = layer->layers[0];
  if (w) std::copy(s.w.begin(), s.w.end(), w);
  if (w_hat) {
    blaq::Vec v = s.w_hat();
    std::copy(v.begin(), v.end(), w_hat);
  }
  if (alpha) *alpha = s.projection == blaq::Projection::Grid ? s.code.alpha : 1.0;
  return BLAQ_OK;
}

blaq_status blaq_layer_gradient_calls(const blaq_layer* layer, unsigned long long* calls) {
  if (!layer || !calls) return fail(BLAQ_ERR_INVALID_ARGUMENT, "null argument");
  *calls = layer->calls;
  return BLAQ_OK;
}

}  // extern "C"
