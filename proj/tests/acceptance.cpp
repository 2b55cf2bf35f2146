// End-to-end acceptance checks. One PASS/FAIL line per criterion.
//   acceptance [--only N] [--mnist-dir DIR]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "blaq/autodiff.hpp"
#include "blaq/errors.hpp"
#include "blaq/experiments.hpp"
#include "blaq/metrics.hpp"
#include "blaq/mlp.hpp"
#include "blaq/objectives.hpp"
#include "blaq/quantizer.hpp"
#include "blaq/rng.hpp"
#include "blaq/theory.hpp"
#include "json.hpp"

using namespace blaq;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Timer {
  std::chrono::steady_clock::time_point wall = std::chrono::steady_clock::now();
  std::clock_t cpu = std::clock();
  double wall_s() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - wall).count(); }
  double cpu_s() const { return static_cast<double>(std::clock() - cpu) / CLOCKS_PER_SEC; }
};

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

fs::path g_work;
std::string g_mnist_dir;

fs::path workdir(const std::string& name) {
  fs::path p = g_work / name;
  fs::remove_all(p);
  return p;
}

// ---- 1 ---------------------------------------------------------------------

Outcome toy2d_fig1() {
  Timer t;
  const double alpha_star = (5 * 0.054 + 0.055) / 6;
  auto base = default_config(ExperimentKind::Toy2d);
  std::ostringstream d;
  bool ok = true;

  auto fp_cfg = base;
  fp_cfg.optimizer = "full-precision";
  auto fp = run_toy2d_trajectory(fp_cfg);
  double fp_err = std::max(std::fabs(fp.final_state.w[0] - 0.054), std::fabs(fp.final_state.w[1] + 0.055));
  ok &= fp_err <= 1e-6;
  d << "fp |w-w*|=" << fmt(fp_err);

  const double target = toy2d_quantized_optimum(1).loss;
  std::map<std::string, std::uint64_t> reach;
  for (const char* opt : {"laq", "blaq"}) {
    auto cfg = base;
    cfg.optimizer = opt;
    auto run = run_toy2d_trajectory(cfg);
    const auto& c = run.final_state.code;
    bool code_ok = c.beta == std::vector<double>{1.0, -1.0} && std::fabs(c.alpha - alpha_star) <= 1e-4;
    ok &= code_ok;
    auto st = steps_to_tolerance(run.record, target, 1e-4);
    reach[opt] = st ? *st : UINT64_MAX;
    d << "; " << opt << " beta=(" << c.beta[0] << "," << c.beta[1] << ") alpha=" << fmt(c.alpha, 8)
      << " steps_to_tol=" << (st ? std::to_string(*st) : "none");
  }
  ok &= reach["blaq"] < reach["laq"];
  const double secs = t.wall_s();
  ok &= secs < 5.0;
  d << "; " << fmt(secs, 3) << " s";
  return {ok, d.str()};
}

// ---- 2 ---------------------------------------------------------------------

ExperimentConfig zigzag_config(const char* opt, int bits) {
  auto cfg = default_config(ExperimentKind::Toy2d);
  cfg.optimizer = opt;
  cfg.bitwidth = bits;
  cfg.eta_schedule = {{0, 0.2}};
  cfg.steps = 1000;
  return cfg;
}

std::size_t total_flips(const TrajectoryRecord& rec, std::size_t window) {
  std::size_t s = 0;
  for (std::size_t i = 0; i < rec.dim(); ++i) s += flip_count(rec, i, window);
  return s;
}

Outcome zigzag_ordering() {
  Timer t;
  std::ostringstream d;
  auto laq = run_toy2d_trajectory(zigzag_config("laq", 1));
  auto blaq = run_toy2d_trajectory(zigzag_config("blaq", 1));
  std::size_t fl = total_flips(laq.record, 100), fb = total_flips(blaq.record, 100);
  std::size_t dl = direction_change_count(laq.record, 100), db = direction_change_count(blaq.record, 100);
  bool ok = fb < fl && db < dl;
  d << "k=1 flips blaq " << fb << " < laq " << fl << ", direction changes blaq " << db << " < laq " << dl
    << "; laq flips by k {1,2,4} =";
  std::size_t prev = SIZE_MAX;
  for (int k : {1, 2, 4}) {
    auto r = run_toy2d_trajectory(zigzag_config("laq", k));
    std::size_t f = total_flips(r.record, 100);
    ok &= f <= prev;
    prev = f;
    d << " " << f;
  }
  const double secs = t.wall_s();
  ok &= secs < 10.0;
  d << "; " << fmt(secs, 3) << " s";
  return {ok, d.str()};
}

// ---- 3 ---------------------------------------------------------------------

Outcome pow32_counterexample() {
  Timer t;
  std::ostringstream d;
  bool ok = true;
  for (double w0 : {0.1, 0.5, 1.0, -0.7}) {
    std::size_t flips[2];
    int i = 0;
    for (const char* opt : {"laq", "blaq"}) {
      auto cfg = default_config(ExperimentKind::ToyPow32);
      cfg.optimizer = opt;
      cfg.a = 0.6;
      cfg.w0 = {w0};
      auto run = run_toy_pow32_trajectory(cfg);
      flips[i++] = flip_count(run.record, 0, 100);
    }
    ok &= flips[0] >= 50 && flips[1] <= 5;
    d << "w0=" << w0 << ": laq " << flips[0] << " blaq " << flips[1] << "; ";
  }
  const double secs = t.wall_s();
  ok &= secs < 2.0;
  d << fmt(secs, 3) << " s";
  return {ok, d.str()};
}

// ---- 4 ---------------------------------------------------------------------

double exhaustive(const std::vector<double>& w, const std::vector<double>& d, int bits) {
  const int h = 1 << (bits - 1);
  std::vector<double> lv;
  for (int i = 1; i <= h; ++i) {
    lv.push_back(static_cast<double>(i) / h);
    lv.push_back(-static_cast<double>(i) / h);
  }
  std::size_t total = 1;
  for (std::size_t i = 0; i < w.size(); ++i) total *= lv.size();
  double best = INFINITY;
  std::vector<double> b(w.size());
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < w.size(); ++i, c /= lv.size()) {
      b[i] = lv[c % lv.size()];
      num += d[i] * w[i] * b[i];
      den += d[i] * b[i] * b[i];
    }
    if (num <= 0) continue;
    double a = num / den, obj = 0;
    for (std::size_t i = 0; i < w.size(); ++i) obj += 0.5 * d[i] * (w[i] - a * b[i]) * (w[i] - a * b[i]);
    best = std::min(best, obj);
  }
  return best;
}

Outcome quantizer_oracle() {
  Timer t;
  Rng rng(4242);
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    std::size_t n = 1 + rng.below(4);
    int bits = 1 + static_cast<int>(rng.below(2));
    std::vector<double> w(n), d(n);
    for (auto& x : w) x = rng.uniform(-2, 2);
    for (auto& x : d) x = rng.uniform(0.1, 5);
    auto c = project(w, d, QuantGrid(bits), 10);
    worst = std::max(worst, weighted_objective(w, d, c) - exhaustive(w, d, bits));
  }
  int mismatches = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    std::size_t n = 1 + rng.below(64);
    std::vector<double> w(n), d(n);
    for (auto& x : w) x = rng.uniform(-3, 3);
    for (auto& x : d) x = rng.uniform(0.01, 10);
    auto c = project(w, d, QuantGrid(1), 5);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i) {
      num += d[i] * std::fabs(w[i]);
      den += d[i];
      if (c.beta[i] != (w[i] < 0 ? -1.0 : 1.0)) ++mismatches;
    }
    if (c.alpha != num / den) ++mismatches;
  }
  const double secs = t.wall_s();
  bool ok = worst <= 1e-9 && mismatches == 0 && secs < 5.0;
  return {ok, "200 instances: max(project - exhaustive) = " + fmt(worst) + "; 1000 closed-form instances: " +
                  std::to_string(mismatches) + " mismatches; " + fmt(secs, 3) + " s"};
}

// ---- 5 ---------------------------------------------------------------------

constexpr double kH = 1e-5;

double rel(double a, double b) { return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-8}); }

Tensor rand_t(Rng& rng, Shape s, double lo, double hi, double min_abs = 0.0) {
  Tensor t(std::move(s));
  for (auto& v : t.values()) {
    do v = rng.uniform(lo, hi);
    while (std::fabs(v) < min_abs);
  }
  return t;
}

double fd_worst(ad::Graph& g, ad::Bindings b) {
  g.forward(b);
  auto grads = g.backward();
  double worst = 0.0;
  for (const auto& name : g.param_names()) {
    Tensor& p = b.at(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      double keep = p[i];
      p[i] = keep + kH;
      double up = g.forward(b);
      p[i] = keep - kH;
      double dn = g.forward(b);
      p[i] = keep;
      worst = std::max(worst, rel(grads.at(name)[i], (up - dn) / (2 * kH)));
    }
  }
  return worst;
}

Outcome gradient_check() {
  Timer t;
  using ad::Graph;
  using ad::NodeId;
  using Build = std::function<void(Graph&, ad::Bindings&, Rng&)>;
  auto contract = [](Graph& g, NodeId y, Rng& rng) {
    g.set_loss(g.sum(g.mul(y, g.constant(rand_t(rng, g.shape(y), 0.5, 1.5)))));
  };
  auto unary = [&](std::function<NodeId(Graph&, NodeId)> op, double min_abs) -> Build {
    return [=](Graph& g, ad::Bindings& b, Rng& rng) {
      b["x"] = rand_t(rng, {3, 4}, -2, 2, min_abs);
      contract(g, op(g, g.param("x", {3, 4})), rng);
    };
  };
  auto binary = [&](std::function<NodeId(Graph&, NodeId, NodeId)> op) -> Build {
    return [=](Graph& g, ad::Bindings& b, Rng& rng) {
      b["x"] = rand_t(rng, {2, 5}, -2, 2);
      b["y"] = rand_t(rng, {2, 5}, -2, 2);
      contract(g, op(g, g.param("x", {2, 5}), g.param("y", {2, 5})), rng);
    };
  };
  std::vector<std::pair<std::string, Build>> prims = {
      {"matmul",
       [&](Graph& g, ad::Bindings& b, Rng& rng) {
         b["a"] = rand_t(rng, {3, 4}, -1, 1);
         b["b"] = rand_t(rng, {4, 2}, -1, 1);
         contract(g, g.matmul(g.param("a", {3, 4}), g.param("b", {4, 2})), rng);
       }},
      {"add_bias",
       [&](Graph& g, ad::Bindings& b, Rng& rng) {
         b["x"] = rand_t(rng, {3, 4}, -1, 1);
         b["b"] = rand_t(rng, {4}, -1, 1);
         contract(g, g.add_bias(g.param("x", {3, 4}), g.param("b", {4})), rng);
       }},
      {"relu", unary([](Graph& g, NodeId x) { return g.relu(x); }, 1e-3)},
      {"softmax_xent",
       [](Graph& g, ad::Bindings& b, Rng& rng) {
         b["z"] = rand_t(rng, {4, 5}, -3, 3);
         Tensor y({4});
         for (auto& v : y.values()) v = static_cast<double>(rng.below(5));
         b["y"] = y;
         g.set_loss(g.softmax_xent(g.param("z", {4, 5}), g.input("y", {4})));
       }},
      {"square", unary([](Graph& g, NodeId x) { return g.square(x); }, 0)},
      {"abs", unary([](Graph& g, NodeId x) { return g.abs(x); }, 1e-3)},
      {"power", unary([](Graph& g, NodeId x) { return g.power(x, 1.5); }, 1e-2)},
      {"scale", unary([](Graph& g, NodeId x) { return g.scale(x, -1.7); }, 0)},
      {"shift", unary([](Graph& g, NodeId x) { return g.shift(x, 0.3); }, 0)},
      {"sum", unary([](Graph& g, NodeId x) { return g.sum(x); }, 0)},
      {"mean", unary([](Graph& g, NodeId x) { return g.mean(x); }, 0)},
      {"add", binary([](Graph& g, NodeId x, NodeId y) { return g.add(x, y); })},
      {"sub", binary([](Graph& g, NodeId x, NodeId y) { return g.sub(x, y); })},
      {"mul", binary([](Graph& g, NodeId x, NodeId y) { return g.mul(x, y); })},
  };
  bool ok = true;
  double overall = 0.0;
  std::string worst_name;
  std::uint64_t seed = 500;
  for (const auto& [name, build] : prims) {
    Rng rng(seed++);
    double worst = 0.0;
    for (int probe = 0; probe < 100; ++probe) {
      Graph g;
      ad::Bindings b;
      build(g, b, rng);
      worst = std::max(worst, fd_worst(g, b));
    }
    if (worst >= overall) {
      overall = worst;
      worst_name = name;
    }
    ok &= worst < 1e-4;
  }

  MlpOracle mlp({12, 8, 6, 4, 3});
  Rng rng(99);
  auto params = mlp.init_params(rng);
  for (std::size_t p = 1; p < params.size(); p += 2)
    for (auto& v : params[p]) v = rng.uniform(-0.3, 0.3);
  Tensor y({9});
  for (auto& v : y.values()) v = static_cast<double>(rng.below(3));
  mlp.set_batch(rand_t(rng, {9, 12}, 0, 1), y);
  std::vector<Vec> grads, scratch;
  mlp.evaluate(params, grads);
  double mlp_worst = 0.0;
  for (int probe = 0; probe < 100; ++probe) {
    std::size_t p = rng.below(params.size()), i = rng.below(params[p].size());
    double keep = params[p][i];
    params[p][i] = keep + kH;
    double up = mlp.evaluate(params, scratch);
    params[p][i] = keep - kH;
    double dn = mlp.evaluate(params, scratch);
    params[p][i] = keep;
    mlp_worst = std::max(mlp_worst, rel(grads[p][i], (up - dn) / (2 * kH)));
  }
  ok &= mlp_worst < 1e-4;
  const double secs = t.wall_s();
  ok &= secs < 10.0;
  return {ok, std::to_string(prims.size()) + " primitives x 100 probes, worst relative error " + fmt(overall, 3) + " (" +
                  worst_name + "); MLP 100 probes worst " + fmt(mlp_worst, 3) + "; " + fmt(secs, 3) + " s"};
}

// ---- 6 ---------------------------------------------------------------------

Outcome theorem_checks() {
  Timer t;
  const double spot = theorem1_bound(TheoryParams{2.0, 1.0, 0.25, 1.0, 0.6});
  auto rep = run_theory_suite(TheorySuiteConfig{});
  std::size_t in_region = 0;
  for (const auto& inst : rep.instances)
    if (!inst.skipped && inst.region.contains(inst.a)) ++in_region;
  const double secs = t.wall_s();
  bool ok = spot == 1.0 && rep.total_violations == 0 && rep.evaluated == 50 && in_region == 50 && rep.blaq_wins >= 45 &&
            secs < 30.0;
  return {ok, "spot bound " + fmt(spot) + "; " + std::to_string(rep.total_violations) + " bound violations; blaq <= laq on " +
                  std::to_string(rep.blaq_wins) + "/" + std::to_string(rep.evaluated) + " (a inside region on " +
                  std::to_string(in_region) + "); " + fmt(secs, 3) + " s"};
}

// ---- 7 ---------------------------------------------------------------------

Outcome mnist_table() {
  Timer t;
  MnistDataset data;
  try {
    data = load_mnist(g_mnist_dir);
  } catch (const Error& e) {
    return {false, std::string("MNIST not available: ") + e.what()};
  }
  if (data.train.count != 60000 || data.test.count != 10000)
    return {false, "expected the full 60000/10000 MNIST split in " + g_mnist_dir};
  std::map<std::string, MnistRun> runs;
  for (const char* opt : {"blaq", "laq"}) {
    auto cfg = default_config(ExperimentKind::TrainMnist);
    cfg.optimizer = opt;
    cfg.bitwidth = 1;
    cfg.a = 0.6;
    cfg.m = 5;
    cfg.data_dir = g_mnist_dir;
    runs[opt] = run_mnist_training(cfg, data);
    std::fprintf(stderr, "  mnist %s: accuracy %.4f after %.0f s\n", opt, runs[opt].final_accuracy, t.wall_s());
  }
  const double acc_b = runs["blaq"].final_accuracy, acc_l = runs["laq"].final_accuracy;
  auto fb = final_quarter_flips(runs["blaq"].record), fl = final_quarter_flips(runs["laq"].record);
  std::size_t lower = 0;
  std::string flips;
  for (std::size_t i = 0; i < fb.size(); ++i) {
    if (fb[i] < fl[i]) ++lower;
    flips += (i ? " " : "") + std::to_string(fb[i]) + "/" + std::to_string(fl[i]);
  }
  const double cpu_min = t.cpu_s() / 60.0;
  bool ok = acc_b >= 0.975 && acc_b >= acc_l - 0.002 && 2 * lower > fb.size() && cpu_min < 30.0;
  return {ok, "blaq " + fmt(acc_b, 4) + " laq " + fmt(acc_l, 4) + "; final-quarter flips blaq/laq [" + flips +
                  "], blaq lower on " + std::to_string(lower) + "/" + std::to_string(fb.size()) + "; " +
                  fmt(cpu_min, 3) + " CPU min"};
}

// ---- 8 ---------------------------------------------------------------------

std::string read_all(const fs::path& dir) {
  std::string out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out += f.filename().string() + "\n" + ss.str();
  }
  return out;
}

Outcome determinism() {
  Timer t;
  std::vector<ExperimentConfig> cfgs;
  for (const char* opt : {"blaq", "laq", "full-precision"}) {
    auto c = default_config(ExperimentKind::Toy2d);
    c.optimizer = opt;
    cfgs.push_back(c);
  }
  {
    auto c = default_config(ExperimentKind::ToyPow32);
    c.optimizer = "laq";
    c.w0 = {-0.7};
    cfgs.push_back(c);
  }
  cfgs.push_back(default_config(ExperimentKind::TheoryCheck));
  {
    auto c = default_config(ExperimentKind::TrainMnist);
    c.data_dir = g_mnist_dir;
    c.epochs = 2;
    c.train_limit = 2560;
    c.test_limit = 1000;
    c.eta_schedule = {{0, 0.005}, {1, 0.0025}};
    c.strict = false;
    cfgs.push_back(c);
  }
  std::size_t same = 0, files = 0;
  std::string bad;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    auto& c = cfgs[i];
    c.output_dir = workdir("determinism_" + std::to_string(i)).string();
    try {
      run_experiment(c);
      std::string first = read_all(c.output_dir);
      run_experiment(c);
      std::string second = read_all(c.output_dir);
      files += static_cast<std::size_t>(std::distance(fs::directory_iterator(c.output_dir), fs::directory_iterator()));
      if (first == second) ++same;
      else bad += std::string(" ") + experiment_name(c.experiment) + "/" + c.optimizer;
    } catch (const Error& e) {
      bad += std::string(" ") + experiment_name(c.experiment) + " (" + e.what() + ")";
    }
  }
  bool ok = same == cfgs.size();
  return {ok, std::to_string(same) + "/" + std::to_string(cfgs.size()) + " runs byte-identical on rerun (" +
                  std::to_string(files) + " files)" + (bad.empty() ? "" : "; differing:" + bad) + "; " +
                  fmt(t.wall_s(), 3) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  g_mnist_dir = default_mnist_dir();
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--only") && i + 1 < argc) only = std::atoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--mnist-dir") && i + 1 < argc) g_mnist_dir = argv[++i];
    else {
      std::fprintf(stderr, "usage: %s [--only N] [--mnist-dir DIR]\n", argv[0]);
      return 2;
    }
  }
  g_work = fs::temp_directory_path() / ("blaq_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(g_work);

  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"toy2d trajectories and quantized optimum", toy2d_fig1},
      {"toy2d zig-zag ordering", zigzag_ordering},
      {"|w|^(3/2) oscillation counterexample", pow32_counterexample},
      {"quantizer against exhaustive search", quantizer_oracle},
      {"gradients against finite differences", gradient_check},
      {"convergence bound and mixing region", theorem_checks},
      {"MNIST 1-bit accuracy and flips", mnist_table},
      {"determinism of outputs", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i + 1) != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.passed) ++failed;
    std::printf("[%s] criterion %zu: %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(g_work);
  return failed ? 1 : 0;
}
