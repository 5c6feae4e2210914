#ifndef STABLE_BICYCLE_TRAJECTORY_HPP
#define STABLE_BICYCLE_TRAJECTORY_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "stable_bicycle/vehicle.hpp"

namespace stable_bicycle {

/// One zero-order-hold segment: the input takes effect at t_start. With a
/// positive ramp the input blends linearly from the previous segment's value
/// over [t_start, t_start + ramp].
struct InputSegment {
  double t_start = 0.0;
  ControlInput input;
  double ramp = 0.0;
};

/**
 * Piecewise-constant input schedule. Segment start times are strictly
 * increasing and the first one is 0. Lookups are taken at sample instants,
 * so the value is held over each discrete interval.
 */
class InputSchedule {
 public:
  InputSchedule() : segments_{InputSegment{}} {}
  explicit InputSchedule(std::vector<InputSegment> segments);

  static InputSchedule constant(ControlInput in) { return InputSchedule({{0.0, in, 0.0}}); }

  ControlInput at(double t) const;
  const std::vector<InputSegment>& segments() const { return segments_; }

 private:
  std::vector<InputSegment> segments_;
};

struct Sample {
  double t = 0.0;
  State6 state;
  ControlInput input;  // input applied from t to t + dt
};

struct Trajectory {
  std::string integrator;
  double dt = 0.0;
  std::vector<Sample> samples;
  bool diverged = false;
  std::optional<double> divergence_time;

  std::size_t size() const { return samples.size(); }
  const State6& final_state() const { return samples.back().state; }
};

/// Sample count for a fixed-rate run: floor(duration/dt) + 1.
std::size_t sample_count(double duration, double dt);

}  // namespace stable_bicycle

#endif  // STABLE_BICYCLE_TRAJECTORY_HPP
