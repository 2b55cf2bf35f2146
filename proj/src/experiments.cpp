#include "blaq/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "blaq/errors.hpp"
#include "blaq/mlp.hpp"
#include "blaq/objectives.hpp"
#include "blaq/rng.hpp"
#include "json.hpp"

namespace blaq {

using nlohmann::json;
namespace fs = std::filesystem;

bool RunSummary::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

namespace {

constexpr double kToyTolerance = 1e-4;

BlaqConfig blaq_config(const ExperimentConfig& cfg) { return BlaqConfig{cfg.a, cfg.m, QuantGrid(cfg.bitwidth)}; }

CurvatureConfig curvature_config(const ExperimentConfig& cfg) {
  CurvatureConfig cc;
  cc.beta2 = cfg.beta2;
  cc.eps = cfg.eps;
  cc.kind = cfg.curvature == "identity" ? MetricKind::Identity : MetricKind::Adaptive;
  return cc;
}

ToyRun run_toy(const ExperimentConfig& cfg, GraphObjective& objective) {
  const OptimizerKind opt = parse_optimizer(cfg.optimizer);
  const BlaqConfig bc = blaq_config(cfg);
  const Projection proj = opt == OptimizerKind::FullPrecision ? Projection::Identity : Projection::Grid;
  std::vector<LayerQuantState> layers;
  layers.push_back(make_layer(cfg.w0, CurvatureState(cfg.w0.size(), curvature_config(cfg), LrSchedule(cfg.eta_schedule)),
                              bc, proj));
  ToyRun run;
  for (std::uint64_t t = 0; t < cfg.steps; ++t) {
    Vec before = layers[0].w;
    optimizer_step(opt, layers, objective, bc);
    const auto& s = layers[0];
    StepSnapshot snap;
    snap.step = t + 1;
    snap.w = s.w;
    snap.w_hat = s.w_hat();
    snap.code = s.code.beta;
    snap.delta_w.resize(s.dim());
    for (std::size_t i = 0; i < s.dim(); ++i) snap.delta_w[i] = s.w[i] - before[i];
    snap.loss = objective.loss_at(snap.w_hat);
    run.record.push(std::move(snap));
  }
  run.final_state = layers[0];
  run.gradient_evaluations = objective.calls();
  return run;
}

json vec_json(const Vec& v) { return json(v); }

json checks_json(const std::vector<Check>& checks) {
  json arr = json::array();
  for (const auto& c : checks) arr.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return arr;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) raise(ErrorKind::Io, "write to " + path.string() + " failed");
}

std::string record_csv(const TrajectoryRecord& rec) {
  std::ostringstream os;
  write_trajectory_csv(os, rec);
  return os.str();
}

std::size_t window_of(const ExperimentConfig& cfg, const TrajectoryRecord& rec) {
  return std::min<std::size_t>(cfg.window, rec.size());
}

json windowed_metrics(const TrajectoryRecord& rec, std::size_t window, RunSummary& sum) {
  json flips = json::array(), amps = json::array();
  std::size_t total = 0;
  for (std::size_t i = 0; i < rec.dim(); ++i) {
    std::size_t f = flip_count(rec, i, window);
    total += f;
    flips.push_back(f);
    amps.push_back(oscillation_amplitude(rec, i, window));
  }
  std::size_t dc = window >= 2 ? direction_change_count(rec, window) : 0;
  sum.scalars["flip_count"] = static_cast<double>(total);
  sum.scalars["direction_change_count"] = static_cast<double>(dc);
  return {{"window", window},
          {"flip_count", flips},
          {"flip_count_total", total},
          {"oscillation_amplitude", amps},
          {"direction_change_count", dc}};
}

json final_state_json(const LayerQuantState& s, const TrajectoryRecord& rec) {
  json j = {{"w", vec_json(s.w)}, {"w_hat", vec_json(s.w_hat())}, {"loss", rec.back().loss}};
  if (s.projection == Projection::Grid) {
    j["alpha"] = s.code.alpha;
    j["beta"] = vec_json(s.code.beta);
  }
  return j;
}

RunSummary toy2d_experiment(const ExperimentConfig& cfg, const fs::path& dir) {
  RunSummary sum;
  ToyRun run = run_toy2d_trajectory(cfg);
  const auto& s = run.final_state;
  const bool fp = s.projection == Projection::Identity;
  const Vec center{0.054, -0.055};

  json m;
  m["experiment"] = "toy2d";
  m["optimizer"] = cfg.optimizer;
  m["bitwidth"] = cfg.bitwidth;
  m["steps"] = cfg.steps;
  m["gradient_evaluations"] = run.gradient_evaluations;
  m["final"] = final_state_json(s, run.record);
  sum.scalars["final_loss"] = run.record.back().loss;
  sum.scalars["gradient_evaluations"] = static_cast<double>(run.gradient_evaluations);

  double target = 0.0;
  if (fp) {
    double err = std::max(std::fabs(s.w[0] - center[0]), std::fabs(s.w[1] - center[1]));
    sum.scalars["terminal_error"] = err;
    m["terminal_error"] = err;
    sum.checks.push_back({"terminal_point", err <= 1e-6, "max |w - (0.054, -0.055)| = " + format_double(err)});
  } else {
    QuantizedOptimum q = toy2d_quantized_optimum(cfg.bitwidth);
    target = q.loss;
    m["quantized_optimum"] = {{"alpha", q.code.alpha}, {"beta", vec_json(q.code.beta)}, {"loss", q.loss}};
    const bool code_ok = s.code.beta == q.code.beta;
    const double alpha_err = std::fabs(s.code.alpha - q.code.alpha);
    sum.scalars["alpha"] = s.code.alpha;
    sum.scalars["alpha_error"] = alpha_err;
    sum.checks.push_back({"terminal_code", code_ok && alpha_err <= kToyTolerance,
                          std::string("beta ") + (code_ok ? "matches" : "differs from") +
                              " the quantized optimum, |alpha - alpha*| = " + format_double(alpha_err)});
  }
  auto st = steps_to_tolerance(run.record, target, kToyTolerance);
  m["tolerance"] = kToyTolerance;
  m["target_loss"] = target;
  m["steps_to_tolerance"] = st ? json(*st) : json(nullptr);
  sum.scalars["steps_to_tolerance"] = st ? static_cast<double>(*st) : -1.0;
  m["zigzag"] = windowed_metrics(run.record, window_of(cfg, run.record), sum);
  m["checks"] = checks_json(sum.checks);

  write_text(dir / "trajectory.csv", record_csv(run.record));
  sum.metrics_json = m.dump(2) + "\n";
  return sum;
}

RunSummary pow32_experiment(const ExperimentConfig& cfg, const fs::path& dir) {
  RunSummary sum;
  ToyRun run = run_toy_pow32_trajectory(cfg);
  const OptimizerKind opt = parse_optimizer(cfg.optimizer);
  const std::size_t window = window_of(cfg, run.record);

  json m;
  m["experiment"] = "toy-pow32";
  m["optimizer"] = cfg.optimizer;
  m["c"] = cfg.c;
  m["steps"] = cfg.steps;
  m["gradient_evaluations"] = run.gradient_evaluations;
  m["final"] = final_state_json(run.final_state, run.record);
  m["zigzag"] = windowed_metrics(run.record, window, sum);
  sum.scalars["final_loss"] = run.record.back().loss;

  std::size_t worst_min = SIZE_MAX, worst_max = 0;
  for (std::size_t i = 0; i < run.record.dim(); ++i) {
    std::size_t f = flip_count(run.record, i, window);
    worst_min = std::min(worst_min, f);
    worst_max = std::max(worst_max, f);
  }
  if (opt == OptimizerKind::Laq)
    sum.checks.push_back({"persistent_oscillation", worst_min >= 50,
                          "min flip count over the last " + std::to_string(window) + " steps = " + std::to_string(worst_min)});
  if (opt == OptimizerKind::Blaq)
    sum.checks.push_back({"no_oscillation", worst_max <= 5,
                          "max flip count over the last " + std::to_string(window) + " steps = " + std::to_string(worst_max)});
  if (opt == OptimizerKind::FullPrecision && cfg.eta_schedule.size() > 1) {
    // Peak |w| over the second half of each schedule segment.
    json peaks = json::array();
    bool monotone = true;
    double prev = INFINITY;
    for (std::size_t k = 0; k < cfg.eta_schedule.size(); ++k) {
      std::uint64_t lo = cfg.eta_schedule[k].first;
      std::uint64_t hi = k + 1 < cfg.eta_schedule.size() ? cfg.eta_schedule[k + 1].first : cfg.steps + 1;
      std::uint64_t mid = lo + (hi - lo) / 2;
      double peak = 0.0;
      for (const auto& snap : run.record.steps())
        if (snap.step >= mid && snap.step < hi)
          for (double w : snap.w) peak = std::max(peak, std::fabs(w));
      peaks.push_back(peak);
      if (peak > prev) monotone = false;
      prev = peak;
    }
    m["segment_peak_abs_w"] = peaks;
    sum.checks.push_back({"shrinking_envelope", monotone, "peak |w| per schedule segment " + peaks.dump()});
  }
  m["checks"] = checks_json(sum.checks);
  write_text(dir / "trajectory.csv", record_csv(run.record));
  sum.metrics_json = m.dump(2) + "\n";
  return sum;
}

RunSummary mnist_experiment(const ExperimentConfig& cfg, const fs::path& dir) {
  RunSummary sum;
  MnistDataset data = load_mnist_for(cfg);
  MnistRun run = run_mnist_training(cfg, data);
  const OptimizerKind opt = parse_optimizer(cfg.optimizer);

  std::ostringstream log;
  log << "epoch,train_loss,test_accuracy\n";
  for (const auto& e : run.log)
    log << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.test_accuracy) << '\n';
  write_text(dir / "training_log.csv", log.str());
  write_text(dir / "trajectory.csv", record_csv(run.record));

  json m;
  m["experiment"] = "train-mnist";
  m["optimizer"] = cfg.optimizer;
  m["bitwidth"] = cfg.bitwidth;
  m["train_samples"] = data.train.count;
  m["test_samples"] = data.test.count;
  m["steps_per_epoch"] = run.steps_per_epoch;
  m["gradient_evaluations"] = run.gradient_evaluations;
  m["final_test_accuracy"] = run.final_accuracy;
  json epochs = json::array();
  for (const auto& e : run.log)
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"test_accuracy", e.test_accuracy}});
  m["epochs"] = epochs;
  json coords = json::array();
  for (const auto& c : run.coords) coords.push_back({{"coord_id", c.coord_id}, {"layer", c.layer}, {"offset", c.offset}});
  m["tracked_coords"] = coords;
  const std::size_t window = std::max<std::size_t>(2, run.record.size() / 4);
  json zz = windowed_metrics(run.record, std::min(window, run.record.size()), sum);
  zz["scope"] = "final quarter of training steps";
  m["zigzag"] = zz;
  sum.scalars["final_test_accuracy"] = run.final_accuracy;

  if (opt != OptimizerKind::Laq)
    sum.checks.push_back({"accuracy_floor", run.final_accuracy >= 0.975,
                          "final test accuracy " + format_double(run.final_accuracy) + " against floor 0.975"});
  m["checks"] = checks_json(sum.checks);
  sum.metrics_json = m.dump(2) + "\n";
  return sum;
}

RunSummary theory_experiment(const ExperimentConfig& cfg, const fs::path& dir) {
  RunSummary sum;
  TheorySuiteConfig tc;
  tc.seed = cfg.seed;
  tc.instances = cfg.instances;
  tc.dim = cfg.dim;
  tc.steps = cfg.steps;
  tc.bits = cfg.bitwidth;
  tc.m = cfg.m;
  TheorySuiteReport rep = run_theory_suite(tc);

  json inst = json::array();
  for (const auto& i : rep.instances) {
    json j = {{"index", i.index}, {"L1", i.L1}, {"mu", i.mu}, {"eta", i.eta}, {"a", i.a}, {"skipped", i.skipped}};
    j["region"] = i.region.empty() ? json(nullptr) : json::array({i.region.lo, i.region.hi});
    if (i.skipped) {
      j["skip_reason"] = i.skip_reason;
    } else {
      j["loss_blaq"] = i.result.loss_blaq;
      j["loss_laq"] = i.result.loss_laq;
      j["blaq_wins"] = i.blaq_wins;
      j["bound_checked"] = i.result.bound_checked;
      j["bound_skipped"] = i.result.bound_skipped;
      j["bound_violations"] = i.result.bound_violations;
    }
    inst.push_back(j);
  }
  json report;
  report["metadata"] = {
      {"metric", "fixed D = I / eta"},
      {"delta_definition", "Delta = ||w^t - w*||, w* the unconstrained minimizer; checked on BLAQ full-precision iterates"},
      {"loss_definition", "final losses evaluated at the quantized iterates"},
      {"win_rule", "loss_blaq <= loss_laq + 1e-9"}};
  report["instances"] = inst;
  json summary = {{"evaluated", rep.evaluated},
                  {"skipped", rep.skipped},
                  {"blaq_wins", rep.blaq_wins},
                  {"instances_with_violations", rep.instances_with_violations},
                  {"total_violations", rep.total_violations}};
  report["summary"] = summary;
  write_text(dir / "theory_report.json", report.dump(2) + "\n");

  const double spot = theorem1_bound(TheoryParams{2.0, 1.0, 0.25, 1.0, 0.6});
  sum.checks.push_back({"theorem1_spot_value", spot == 1.0, "bound(L1=2, mu=1, eta=0.25, delta=1) = " + format_double(spot)});
  const std::size_t need = (rep.evaluated * 9 + 9) / 10;
  sum.checks.push_back({"blaq_not_worse", rep.evaluated > 0 && rep.blaq_wins >= need,
                        std::to_string(rep.blaq_wins) + " of " + std::to_string(rep.evaluated) + " instances, need " +
                            std::to_string(need)});
  sum.checks.push_back({"bound_holds", rep.total_violations == 0,
                        std::to_string(rep.total_violations) + " bound violations"});
  sum.scalars["blaq_wins"] = static_cast<double>(rep.blaq_wins);
  sum.scalars["evaluated"] = static_cast<double>(rep.evaluated);
  sum.scalars["bound_violations"] = static_cast<double>(rep.total_violations);

  json m;
  m["experiment"] = "theory-check";
  m["summary"] = summary;
  m["checks"] = checks_json(sum.checks);
  sum.metrics_json = m.dump(2) + "\n";
  return sum;
}

}  // namespace

QuantizedOptimum toy2d_quantized_optimum(int bits) {
  const QuantGrid grid(bits);
  const Vec lambda{10.0, 2.0}, center{0.054, -0.055};
  QuantizedOptimum best;
  best.loss = INFINITY;
  for (double b0 : grid.levels())
    for (double b1 : grid.levels()) {
      const Vec beta{b0, b1};
      double num = 0.0, den = 0.0;
      for (int i = 0; i < 2; ++i) {
        num += lambda[i] * beta[i] * center[i];
        den += lambda[i] * beta[i] * beta[i];
      }
      const double alpha = num / den;
      if (!(alpha > 0.0)) continue;
      double loss = 0.0;
      for (int i = 0; i < 2; ++i) loss += 0.5 * lambda[i] * (alpha * beta[i] - center[i]) * (alpha * beta[i] - center[i]);
      if (loss < best.loss) best = {ScaledCode{alpha, beta}, loss};
    }
  return best;
}

ToyRun run_toy2d_trajectory(const ExperimentConfig& cfg) {
  validate_config(cfg);
  QuadraticObjective obj = toy2d_objective();
  return run_toy(cfg, obj);
}

ToyRun run_toy_pow32_trajectory(const ExperimentConfig& cfg) {
  validate_config(cfg);
  PowObjective obj(cfg.w0.size(), cfg.c);
  return run_toy(cfg, obj);
}

MnistDataset load_mnist_for(const ExperimentConfig& cfg) {
  if (cfg.fetch) fetch_mnist(cfg.mirror_url, cfg.data_dir);
  MnistDataset data = load_mnist(cfg.data_dir);
  auto trim = [](MnistSplit& s, std::uint64_t limit) {
    if (limit == 0 || limit >= s.count) return;
    s.count = limit;
    s.pixels.resize(limit * 28 * 28);
    s.labels.resize(limit);
  };
  trim(data.train, cfg.train_limit);
  trim(data.test, cfg.test_limit);
  if (data.train.count == 0 || data.test.count == 0) raise(ErrorKind::Format, cfg.data_dir + ": empty MNIST split");
  return data;
}

MnistRun run_mnist_training(const ExperimentConfig& cfg, const MnistDataset& data) {
  validate_config(cfg);
  const OptimizerKind opt = parse_optimizer(cfg.optimizer);
  const BlaqConfig bc = blaq_config(cfg);

  std::vector<std::size_t> sizes{28 * 28};
  for (auto h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(10);
  MlpOracle net(sizes);

  const std::size_t n = data.train.count;
  const std::size_t batch = std::min<std::size_t>(cfg.batch_size, n);
  const std::uint64_t spe = n / batch;

  // Epoch breakpoints become optimizer steps (1-based).
  std::vector<LrSchedule::Point> sched;
  for (const auto& [epoch, eta] : cfg.eta_schedule) sched.emplace_back(epoch == 0 ? 0 : epoch * spe + 1, eta);
  const LrSchedule schedule(sched);
  CurvatureConfig cc;
  cc.beta2 = cfg.beta2;
  cc.eps = cfg.eps;

  Rng init_rng(cfg.seed * 4 + 1);
  Rng shuffle_rng(cfg.seed * 4 + 2);
  Rng coord_rng(cfg.seed * 4 + 3);

  std::vector<Vec> params = net.init_params(init_rng);
  std::vector<LayerQuantState> layers;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const bool grid = MlpOracle::is_weight(p) && opt != OptimizerKind::FullPrecision;
    layers.push_back(make_layer(params[p], CurvatureState(params[p].size(), cc, schedule), bc,
                                grid ? Projection::Grid : Projection::Identity));
  }

  MnistRun run;
  run.steps_per_epoch = spe;
  std::uint64_t total_weights = 0;
  std::vector<std::uint64_t> weight_start;
  for (std::size_t p = 0; p < params.size(); p += 2) {
    weight_start.push_back(total_weights);
    total_weights += params[p].size();
  }
  std::vector<std::uint64_t> ids;
  while (ids.size() < std::min<std::uint64_t>(cfg.track_coords, total_weights)) {
    std::uint64_t id = coord_rng.below(total_weights);
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  std::vector<std::pair<std::size_t, std::size_t>> where;  // (param index, offset)
  for (auto id : ids) {
    std::size_t l = static_cast<std::size_t>(std::upper_bound(weight_start.begin(), weight_start.end(), id) - weight_start.begin()) - 1;
    run.coords.push_back({id, l + 1, static_cast<std::size_t>(id - weight_start[l])});
    where.emplace_back(2 * l, static_cast<std::size_t>(id - weight_start[l]));
  }
  run.record = TrajectoryRecord(ids);

  std::vector<std::size_t> test_rows(data.test.count);
  for (std::size_t i = 0; i < test_rows.size(); ++i) test_rows[i] = i;
  const Tensor test_x = mnist_images(data.test, test_rows);
  const Tensor test_y = mnist_labels(data.test, test_rows);

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::uint64_t step = 0;
  for (std::uint64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(perm);
    double loss_sum = 0.0;
    for (std::uint64_t b = 0; b < spe; ++b) {
      std::vector<std::size_t> rows(perm.begin() + static_cast<std::ptrdiff_t>(b * batch),
                                    perm.begin() + static_cast<std::ptrdiff_t>((b + 1) * batch));
      net.set_batch(mnist_images(data.train, rows), mnist_labels(data.train, rows));
      Vec before(where.size());
      for (std::size_t i = 0; i < where.size(); ++i) before[i] = layers[where[i].first].w[where[i].second];
      const double loss = optimizer_step(opt, layers, net, bc);
      loss_sum += loss;
      ++step;

      StepSnapshot snap;
      snap.step = step;
      snap.loss = loss;
      for (std::size_t i = 0; i < where.size(); ++i) {
        const auto& s = layers[where[i].first];
        const std::size_t off = where[i].second;
        snap.w.push_back(s.w[off]);
        snap.w_hat.push_back(s.projection == Projection::Grid ? s.code.alpha * s.code.beta[off] : s.w[off]);
        snap.code.push_back(s.code.beta[off]);
        snap.delta_w.push_back(s.w[off] - before[i]);
      }
      run.record.push(std::move(snap));
    }
    std::vector<Vec> eval_params;
    for (const auto& s : layers) eval_params.push_back(s.w_hat());
    const double acc = net.accuracy(eval_params, test_x, test_y);
    run.log.push_back({epoch + 1, loss_sum / static_cast<double>(spe), acc});
  }
  run.final_accuracy = run.log.back().test_accuracy;
  run.gradient_evaluations = net.calls();
  return run;
}

std::vector<std::size_t> final_quarter_flips(const TrajectoryRecord& rec) {
  const std::size_t window = std::min(rec.size(), std::max<std::size_t>(2, rec.size() / 4));
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rec.dim(); ++i) out.push_back(flip_count(rec, i, window));
  return out;
}

RunSummary run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "config.json", config_to_json(cfg));
  RunSummary sum;
  switch (cfg.experiment) {
    case ExperimentKind::Toy2d: sum = toy2d_experiment(cfg, dir); break;
    case ExperimentKind::ToyPow32: sum = pow32_experiment(cfg, dir); break;
    case ExperimentKind::TrainMnist: sum = mnist_experiment(cfg, dir); break;
    case ExperimentKind::TheoryCheck: sum = theory_experiment(cfg, dir); break;
  }
  write_text(dir / "metrics.json", sum.metrics_json);
  return sum;
}

}  // namespace blaq
