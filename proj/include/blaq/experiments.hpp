#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blaq/config.hpp"
#include "blaq/metrics.hpp"
#include "blaq/mnist.hpp"
#include "blaq/optimizers.hpp"
#include "blaq/theory.hpp"

namespace blaq {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunSummary {
  std::vector<Check> checks;
  std::map<std::string, double> scalars;
  std::string metrics_json;

  bool passed() const;
};

struct ToyRun {
  TrajectoryRecord record;
  LayerQuantState final_state;
  std::uint64_t gradient_evaluations = 0;
};

struct QuantizedOptimum {
  ScaledCode code;
  double loss = 0.0;
};

// Best alpha * beta for the toy2d quadratic, by enumerating every code.
QuantizedOptimum toy2d_quantized_optimum(int bits);

ToyRun run_toy2d_trajectory(const ExperimentConfig& cfg);
ToyRun run_toy_pow32_trajectory(const ExperimentConfig& cfg);

struct EpochLog {
  std::uint64_t epoch = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
};

struct TrackedCoord {
  std::uint64_t coord_id = 0;  // index into the concatenated weight matrices
  std::size_t layer = 0;       // 1-based weight layer
  std::size_t offset = 0;      // row-major offset inside that layer
};

struct MnistRun {
  std::vector<EpochLog> log;
  TrajectoryRecord record;
  std::vector<TrackedCoord> coords;
  std::uint64_t steps_per_epoch = 0;
  std::uint64_t gradient_evaluations = 0;
  double final_accuracy = 0.0;
};

MnistDataset load_mnist_for(const ExperimentConfig& cfg);
MnistRun run_mnist_training(const ExperimentConfig& cfg, const MnistDataset& data);

// Per-coordinate flip counts over the last quarter of the record.
std::vector<std::size_t> final_quarter_flips(const TrajectoryRecord& rec);

// Validates, runs, and writes config.json, metrics.json and the CSV/JSON
// outputs of the experiment into cfg.output_dir.
RunSummary run_experiment(const ExperimentConfig& cfg);

}  // namespace blaq
