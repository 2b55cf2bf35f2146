#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace blaq {

enum class ExperimentKind { Toy2d, ToyPow32, TrainMnist, TheoryCheck };

const char* experiment_name(ExperimentKind kind);
ExperimentKind parse_experiment(const std::string& name);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Toy2d;
  std::string optimizer = "blaq";
  int bitwidth = 1;
  double a = 0.6;
  int m = 5;
  // Steps for the toys, epochs for train-mnist.
  std::vector<std::pair<std::uint64_t, double>> eta_schedule{{0, 0.01}};
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  bool strict = true;

  // toys
  std::uint64_t steps = 1000;
  std::string curvature = "adaptive";
  std::uint64_t window = 100;
  std::vector<double> w0;
  double c = 1.0;

  // train-mnist
  std::uint64_t epochs = 20;
  std::uint64_t batch_size = 128;
  std::string data_dir;
  std::vector<std::uint64_t> hidden{256, 128, 64};
  std::uint64_t track_coords = 8;
  std::uint64_t train_limit = 0;
  std::uint64_t test_limit = 0;
  bool fetch = false;
  std::string mirror_url;

  // theory-check
  std::uint64_t instances = 50;
  std::uint64_t dim = 8;
};

ExperimentConfig default_config(ExperimentKind kind);

// Merge a JSON object. Unknown keys, wrong types and bad values raise config errors.
void apply_config_json(ExperimentConfig& cfg, const std::string& json_text, const std::string& origin);
void load_config_file(ExperimentConfig& cfg, const std::string& path);
// value is parsed as JSON when possible and as a bare string otherwise.
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);
void validate_config(const ExperimentConfig& cfg);

// Resolved configuration with the keys that apply to its experiment.
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace blaq
