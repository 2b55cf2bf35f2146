#include "blaq/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "blaq/errors.hpp"
#include "blaq/mnist.hpp"
#include "blaq/optimizers.hpp"
#include "json.hpp"

namespace blaq {

using nlohmann::json;

namespace {

const std::set<std::string> kCommon = {"experiment", "seed", "output_dir", "strict", "bitwidth", "m"};
const std::set<std::string> kOptim = {"optimizer", "a", "eta_schedule", "beta2", "eps"};
const std::set<std::string> kToy = {"steps", "curvature", "window", "w0"};

std::set<std::string> allowed_keys(ExperimentKind kind) {
  std::set<std::string> keys = kCommon;
  auto add = [&](const std::set<std::string>& more) { keys.insert(more.begin(), more.end()); };
  switch (kind) {
    case ExperimentKind::Toy2d:
      add(kOptim);
      add(kToy);
      break;
    case ExperimentKind::ToyPow32:
      add(kOptim);
      add(kToy);
      keys.insert("c");
      break;
    case ExperimentKind::TrainMnist:
      add(kOptim);
      add({"epochs", "batch_size", "data_dir", "hidden", "track_coords", "train_limit", "test_limit", "fetch",
           "mirror_url"});
      break;
    case ExperimentKind::TheoryCheck:
      add({"steps", "instances", "dim"});
      break;
  }
  return keys;
}

[[noreturn]] void bad(const std::string& origin, const std::string& key, const std::string& what) {
  raise(ErrorKind::Config, origin + ": '" + key + "' " + what);
}

double get_number(const json& v, const std::string& origin, const std::string& key) {
  if (!v.is_number()) bad(origin, key, "must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) bad(origin, key, "must be finite");
  return d;
}

std::uint64_t get_count(const json& v, const std::string& origin, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 9.0e15) return static_cast<std::uint64_t>(d);
  }
  bad(origin, key, "must be a non-negative integer");
}

std::string get_string(const json& v, const std::string& origin, const std::string& key) {
  if (!v.is_string()) bad(origin, key, "must be a string");
  return v.get<std::string>();
}

bool get_bool(const json& v, const std::string& origin, const std::string& key) {
  if (!v.is_boolean()) bad(origin, key, "must be true or false");
  return v.get<bool>();
}

void apply_object(ExperimentConfig& cfg, const json& obj, const std::string& origin) {
  if (!obj.is_object()) raise(ErrorKind::Config, origin + ": configuration must be a JSON object");
  if (auto it = obj.find("experiment"); it != obj.end()) {
    ExperimentKind k = parse_experiment(get_string(*it, origin, "experiment"));
    if (k != cfg.experiment)
      raise(ErrorKind::Config, origin + ": experiment '" + experiment_name(k) + "' does not match '" +
                                   experiment_name(cfg.experiment) + "'");
  }
  const auto keys = allowed_keys(cfg.experiment);
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!keys.count(it.key()))
      raise(ErrorKind::Config, origin + ": unknown key '" + it.key() + "' for " + experiment_name(cfg.experiment));

  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "experiment") continue;
    if (k == "optimizer") cfg.optimizer = get_string(v, origin, k);
    else if (k == "bitwidth") cfg.bitwidth = static_cast<int>(get_count(v, origin, k));
    else if (k == "a") cfg.a = get_number(v, origin, k);
    else if (k == "m") cfg.m = static_cast<int>(get_count(v, origin, k));
    else if (k == "beta2") cfg.beta2 = get_number(v, origin, k);
    else if (k == "eps") cfg.eps = get_number(v, origin, k);
    else if (k == "seed") cfg.seed = get_count(v, origin, k);
    else if (k == "output_dir") cfg.output_dir = get_string(v, origin, k);
    else if (k == "strict") cfg.strict = get_bool(v, origin, k);
    else if (k == "steps") cfg.steps = get_count(v, origin, k);
    else if (k == "curvature") cfg.curvature = get_string(v, origin, k);
    else if (k == "window") cfg.window = get_count(v, origin, k);
    else if (k == "c") cfg.c = get_number(v, origin, k);
    else if (k == "epochs") cfg.epochs = get_count(v, origin, k);
    else if (k == "batch_size") cfg.batch_size = get_count(v, origin, k);
    else if (k == "data_dir") cfg.data_dir = get_string(v, origin, k);
    else if (k == "track_coords") cfg.track_coords = get_count(v, origin, k);
    else if (k == "train_limit") cfg.train_limit = get_count(v, origin, k);
    else if (k == "test_limit") cfg.test_limit = get_count(v, origin, k);
    else if (k == "fetch") cfg.fetch = get_bool(v, origin, k);
    else if (k == "mirror_url") cfg.mirror_url = get_string(v, origin, k);
    else if (k == "instances") cfg.instances = get_count(v, origin, k);
    else if (k == "dim") cfg.dim = get_count(v, origin, k);
    else if (k == "w0") {
      if (!v.is_array()) bad(origin, k, "must be an array of numbers");
      cfg.w0.clear();
      for (const auto& x : v) cfg.w0.push_back(get_number(x, origin, k));
    } else if (k == "hidden") {
      if (!v.is_array()) bad(origin, k, "must be an array of layer widths");
      cfg.hidden.clear();
      for (const auto& x : v) cfg.hidden.push_back(get_count(x, origin, k));
    } else if (k == "eta_schedule") {
      if (v.is_number()) {
        cfg.eta_schedule = {{0, get_number(v, origin, k)}};
        continue;
      }
      if (!v.is_array()) bad(origin, k, "must be a number or an array of [start, eta] pairs");
      cfg.eta_schedule.clear();
      for (const auto& p : v) {
        if (!p.is_array() || p.size() != 2) bad(origin, k, "entries must be [start, eta] pairs");
        cfg.eta_schedule.emplace_back(get_count(p[0], origin, k), get_number(p[1], origin, k));
      }
    }
  }
}

}  // namespace

const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Toy2d: return "toy2d";
    case ExperimentKind::ToyPow32: return "toy-pow32";
    case ExperimentKind::TrainMnist: return "train-mnist";
    case ExperimentKind::TheoryCheck: return "theory-check";
  }
  return "?";
}

ExperimentKind parse_experiment(const std::string& name) {
  if (name == "toy2d") return ExperimentKind::Toy2d;
  if (name == "toy-pow32") return ExperimentKind::ToyPow32;
  if (name == "train-mnist") return ExperimentKind::TrainMnist;
  if (name == "theory-check") return ExperimentKind::TheoryCheck;
  raise(ErrorKind::Config, "unknown experiment '" + name + "'");
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  switch (kind) {
    case ExperimentKind::Toy2d:
      cfg.eta_schedule = {{0, 0.1}};
      cfg.steps = 300;
      cfg.w0 = {1.0, 1.0};
      cfg.output_dir = "out/toy2d";
      break;
    case ExperimentKind::ToyPow32:
      cfg.eta_schedule = {{0, 0.01}};
      cfg.steps = 1000;
      cfg.w0 = {1.0};
      cfg.output_dir = "out/toy-pow32";
      break;
    case ExperimentKind::TrainMnist:
      cfg.eta_schedule = {{0, 0.005}, {10, 0.0025}, {15, 0.00125}};
      cfg.data_dir = default_mnist_dir();
      cfg.output_dir = "out/train-mnist";
      break;
    case ExperimentKind::TheoryCheck:
      cfg.steps = 300;
      cfg.seed = 7;
      cfg.output_dir = "out/theory-check";
      break;
  }
  return cfg;
}

void apply_config_json(ExperimentConfig& cfg, const std::string& json_text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    raise(ErrorKind::Config, origin + ": invalid JSON: " + e.what());
  }
  apply_object(cfg, doc, origin);
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::Config, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_json(cfg, ss.str(), path);
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  std::string k = key;
  for (auto& ch : k)
    if (ch == '-') ch = '_';
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded()) v = value;
  json obj = json::object();
  obj[k] = v;
  apply_object(cfg, obj, "--" + key);
}

void validate_config(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& what) { raise(ErrorKind::Config, what); };
  try {
    parse_optimizer(cfg.optimizer);
    QuantGrid g(cfg.bitwidth);
    (void)g;
  } catch (const Error& e) {
    fail(e.what());
  }
  if (!(cfg.a >= 0.0 && cfg.a <= 1.0)) fail("a must lie in [0, 1]");
  if (cfg.m < 1) fail("m must be >= 1");
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) fail("beta2 must lie in [0, 1)");
  if (!(cfg.eps > 0.0)) fail("eps must be positive");
  if (cfg.eta_schedule.empty() || cfg.eta_schedule.front().first != 0) fail("eta_schedule must start at 0");
  for (std::size_t i = 0; i < cfg.eta_schedule.size(); ++i) {
    if (!(cfg.eta_schedule[i].second > 0.0)) fail("eta_schedule values must be positive");
    if (i > 0 && cfg.eta_schedule[i].first <= cfg.eta_schedule[i - 1].first) fail("eta_schedule starts must increase");
  }
  if (cfg.output_dir.empty()) fail("output_dir must not be empty");
  switch (cfg.experiment) {
    case ExperimentKind::Toy2d:
    case ExperimentKind::ToyPow32: {
      if (cfg.steps < 2) fail("steps must be at least 2");
      if (cfg.window < 2) fail("window must be at least 2");
      if (cfg.curvature != "adaptive" && cfg.curvature != "identity") fail("curvature must be 'adaptive' or 'identity'");
      const std::size_t want = cfg.experiment == ExperimentKind::Toy2d ? 2 : 1;
      if (cfg.experiment == ExperimentKind::Toy2d && cfg.w0.size() != want) fail("w0 must have 2 entries for toy2d");
      if (cfg.experiment == ExperimentKind::ToyPow32 && cfg.w0.empty()) fail("w0 must not be empty");
      if (!(cfg.c > 0.0)) fail("c must be positive");
      break;
    }
    case ExperimentKind::TrainMnist:
      if (cfg.epochs < 1) fail("epochs must be >= 1");
      if (cfg.batch_size < 1) fail("batch_size must be >= 1");
      if (cfg.track_coords < 1 || cfg.track_coords > 8) fail("track_coords must be in 1..8");
      for (auto h : cfg.hidden)
        if (h < 1) fail("hidden widths must be positive");
      if (cfg.data_dir.empty()) fail("data_dir must not be empty");
      if (cfg.fetch && cfg.mirror_url.empty()) fail("fetch requires mirror_url");
      break;
    case ExperimentKind::TheoryCheck:
      if (cfg.instances < 1) fail("instances must be >= 1");
      if (cfg.dim < 2) fail("dim must be >= 2");
      if (cfg.steps < 1) fail("steps must be >= 1");
      break;
  }
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  const auto keys = allowed_keys(cfg.experiment);
  auto put = [&](const char* k, json v) {
    if (keys.count(k)) j[k] = std::move(v);
  };
  json sched = json::array();
  for (const auto& [s, e] : cfg.eta_schedule) sched.push_back({s, e});
  put("experiment", experiment_name(cfg.experiment));
  put("optimizer", cfg.optimizer);
  put("bitwidth", cfg.bitwidth);
  put("a", cfg.a);
  put("m", cfg.m);
  put("eta_schedule", sched);
  put("beta2", cfg.beta2);
  put("eps", cfg.eps);
  put("seed", cfg.seed);
  put("output_dir", cfg.output_dir);
  put("strict", cfg.strict);
  put("steps", cfg.steps);
  put("curvature", cfg.curvature);
  put("window", cfg.window);
  put("w0", cfg.w0);
  put("c", cfg.c);
  put("epochs", cfg.epochs);
  put("batch_size", cfg.batch_size);
  put("data_dir", cfg.data_dir);
  put("hidden", cfg.hidden);
  put("track_coords", cfg.track_coords);
  put("train_limit", cfg.train_limit);
  put("test_limit", cfg.test_limit);
  put("fetch", cfg.fetch);
  put("mirror_url", cfg.mirror_url);
  put("instances", cfg.instances);
  put("dim", cfg.dim);
  if (cfg.experiment == ExperimentKind::TrainMnist) j["eta_schedule_unit"] = "epoch";
  else if (cfg.experiment != ExperimentKind::TheoryCheck) j["eta_schedule_unit"] = "step";
  return j.dump(2) + "\n";
}

}  // namespace blaq
