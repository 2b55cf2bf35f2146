#include "blaq/metrics.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "blaq/errors.hpp"

namespace blaq {

void TrajectoryRecord::push(StepSnapshot s) {
  if (coord_ids_.empty() && steps_.empty()) {
    coord_ids_.resize(s.w.size());
    for (std::size_t i = 0; i < coord_ids_.size(); ++i) coord_ids_[i] = i;
  }
  const std::size_t n = coord_ids_.size();
  if (s.w.size() != n || s.w_hat.size() != n || s.code.size() != n || s.delta_w.size() != n)
    raise(ErrorKind::Shape, "snapshot at step " + std::to_string(s.step) + " does not have " + std::to_string(n) + " coordinates");
  if (!steps_.empty() && s.step <= steps_.back().step)
    raise(ErrorKind::State, "snapshot step " + std::to_string(s.step) + " does not follow step " + std::to_string(steps_.back().step));
  steps_.push_back(std::move(s));
}

namespace {

std::size_t window_start(const TrajectoryRecord& rec, std::size_t window, const char* who) {
  if (window == 0 || rec.empty()) raise(ErrorKind::Domain, std::string(who) + ": empty window");
  if (window > rec.size())
    raise(ErrorKind::Domain, std::string(who) + ": window " + std::to_string(window) + " exceeds record length " +
                                 std::to_string(rec.size()));
  return rec.size() - window;
}

void check_coord(const TrajectoryRecord& rec, std::size_t coord, const char* who) {
  if (coord >= rec.dim()) raise(ErrorKind::Domain, std::string(who) + ": coordinate " + std::to_string(coord) + " out of range");
}

}  // namespace

double oscillation_amplitude(const TrajectoryRecord& rec, std::size_t coord, std::size_t window) {
  std::size_t s = window_start(rec, window, "oscillation_amplitude");
  check_coord(rec, coord, "oscillation_amplitude");
  double amp = 0.0;
  for (std::size_t t = s + 1; t < rec.size(); ++t) amp = std::max(amp, std::fabs(rec[t].w[coord] - rec[t - 1].w[coord]));
  return amp;
}

std::size_t flip_count(const TrajectoryRecord& rec, std::size_t coord, std::size_t window) {
  std::size_t s = window_start(rec, window, "flip_count");
  check_coord(rec, coord, "flip_count");
  std::size_t flips = 0;
  for (std::size_t t = s + 1; t < rec.size(); ++t)
    if (rec[t].code[coord] != rec[t - 1].code[coord]) ++flips;
  return flips;
}

std::size_t direction_change_count(const TrajectoryRecord& rec, std::size_t window) {
  std::size_t s = window_start(rec, window, "direction_change_count");
  if (window < 2) raise(ErrorKind::Domain, "direction_change_count: window needs at least two updates");
  std::size_t changes = 0;
  for (std::size_t t = s + 1; t < rec.size(); ++t) {
    double dot = 0.0;
    for (std::size_t i = 0; i < rec.dim(); ++i) dot += rec[t].delta_w[i] * rec[t - 1].delta_w[i];
    if (dot < 0.0) ++changes;
  }
  return changes;
}

std::optional<std::uint64_t> steps_to_tolerance(const TrajectoryRecord& rec, double target, double tol) {
  if (!(tol > 0.0)) raise(ErrorKind::Domain, "steps_to_tolerance: tolerance must be positive");
  for (const auto& s : rec.steps())
    if (s.loss - target <= tol) return s.step;
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
  os << "step,loss,coord_id,w,w_hat,delta_w\n";
  for (const auto& s : rec.steps())
    for (std::size_t i = 0; i < rec.dim(); ++i)
      os << s.step << ',' << format_double(s.loss) << ',' << rec.coord_ids()[i] << ',' << format_double(s.w[i]) << ','
         << format_double(s.w_hat[i]) << ',' << format_double(s.delta_w[i]) << '\n';
}

}  // namespace blaq
