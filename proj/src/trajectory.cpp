#include "stable_bicycle/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stable_bicycle {

namespace {
// Sample instants are computed as k*dt, so a segment boundary that should
// coincide with a sample can land a few ulps early or late.
constexpr double kTimeSlack = 1e-9;
}  // namespace

InputSchedule::InputSchedule(std::vector<InputSegment> segments)
    : segments_(std::move(segments)) {
  if (segments_.empty()) throw std::invalid_argument("input schedule is empty");
  if (segments_.front().t_start != 0.0) {
    throw std::invalid_argument("input schedule must start at t = 0");
  }
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& seg = segments_[i];
    if (!std::isfinite(seg.input.accel) || !std::isfinite(seg.input.steer)) {
      throw std::invalid_argument("input schedule contains a non-finite input");
    }
    if (!(seg.ramp >= 0.0)) throw std::invalid_argument("segment ramp must be >= 0");
    if (i > 0 && !(seg.t_start > segments_[i - 1].t_start)) {
      throw std::invalid_argument("input schedule times must be strictly increasing");
    }
  }
}

ControlInput InputSchedule::at(double t) const {
  std::size_t idx = 0;
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    if (t + kTimeSlack >= segments_[i].t_start) idx = i;
  }
  const InputSegment& seg = segments_[idx];
  if (idx == 0 || seg.ramp <= 0.0) return seg.input;

  const double w = std::min(1.0, (t - seg.t_start) / seg.ramp);
  if (w >= 1.0) return seg.input;
  const ControlInput& prev = segments_[idx - 1].input;
  const double frac = std::max(0.0, w);
  return {prev.accel + frac * (seg.input.accel - prev.accel),
          prev.steer + frac * (seg.input.steer - prev.steer)};
}

std::size_t sample_count(double duration, double dt) {
  return static_cast<std::size_t>(std::floor(duration / dt + kTimeSlack)) + 1;
}

}  // namespace stable_bicycle
