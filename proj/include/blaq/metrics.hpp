#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace blaq {

struct StepSnapshot {
  std::uint64_t step = 0;
  double loss = 0.0;
  std::vector<double> w;
  std::vector<double> w_hat;
  std::vector<double> code;  // grid level per coordinate
  std::vector<double> delta_w;
};

// Per-step log over a fixed set of tracked coordinates.
class TrajectoryRecord {
 public:
  TrajectoryRecord() = default;
  explicit TrajectoryRecord(std::vector<std::uint64_t> coord_ids) : coord_ids_(std::move(coord_ids)) {}

  void push(StepSnapshot s);

  std::size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }
  std::size_t dim() const { return coord_ids_.size(); }
  const StepSnapshot& operator[](std::size_t i) const { return steps_[i]; }
  const StepSnapshot& back() const { return steps_.back(); }
  const std::vector<StepSnapshot>& steps() const { return steps_; }
  const std::vector<std::uint64_t>& coord_ids() const { return coord_ids_; }

 private:
  std::vector<std::uint64_t> coord_ids_;
  std::vector<StepSnapshot> steps_;
};

// All windowed metrics look at the last `window` snapshots.
double oscillation_amplitude(const TrajectoryRecord& rec, std::size_t coord, std::size_t window);
std::size_t flip_count(const TrajectoryRecord& rec, std::size_t coord, std::size_t window);
std::size_t direction_change_count(const TrajectoryRecord& rec, std::size_t window);
std::optional<std::uint64_t> steps_to_tolerance(const TrajectoryRecord& rec, double target, double tol);

// step,loss,coord_id,w,w_hat,delta_w
void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec);

// Shortest round-trip decimal form, identical across runs.
std::string format_double(double v);

}  // namespace blaq
