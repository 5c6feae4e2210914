#include "stable_bicycle/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stable_bicycle {

namespace {

State6 axpy(const State6& x, double h, const State6& d) {
  return {x.x + h * d.x, x.y + h * d.y, x.yaw + h * d.yaw,
          x.u + h * d.u, x.v + h * d.v, x.yaw_rate + h * d.yaw_rate};
}

double max_abs_diff(const State6& a, const State6& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.yaw - b.yaw),
                   std::abs(a.u - b.u), std::abs(a.v - b.v),
                   std::abs(a.yaw_rate - b.yaw_rate)});
}

}  // namespace

StepSize::StepSize(double seconds) : seconds_(seconds) {
  if (!(seconds > 0.0) || !std::isfinite(seconds)) {
    throw std::invalid_argument("T_s must be positive and finite");
  }
}

State6 step_forward_euler(const VehicleParams& p, const State6& s, const ControlInput& in,
                          StepSize dt) {
  return axpy(s, dt.value(), dynamic_rhs(p, s, in));
}

State6 step_backward_euler(const VehicleParams& p, const State6& s, const ControlInput& in,
                           StepSize dt, const FixedPointConfig& cfg) {
  if (cfg.max_iters < 1 || !(cfg.tol > 0.0)) {
    throw std::invalid_argument("fixed-point config needs max_iters >= 1 and tol > 0");
  }
  const double h = dt.value();
  State6 iterate = step_forward_euler(p, s, in, dt);
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (!(iterate.u > 0.0)) {
      throw ConvergenceError("backward Euler fixed-point iterate " + std::to_string(it) +
                             " left the domain (U <= 0)");
    }
    const State6 next = axpy(s, h, dynamic_rhs(p, iterate, in));
    const double change = max_abs_diff(next, iterate);
    iterate = next;
    if (!std::isfinite(change)) break;
    if (change <= cfg.tol) return iterate;
  }
  throw ConvergenceError("backward Euler fixed-point iteration did not converge in " +
                         std::to_string(cfg.max_iters) + " iterations");
}

double backward_euler_residual(const VehicleParams& p, const State6& s, const State6& next,
                               const ControlInput& in, StepSize dt) {
  return max_abs_diff(next, axpy(s, dt.value(), dynamic_rhs(p, next, in)));
}

ProposedStep step_proposed_checked(const VehicleParams& p, const State6& s,
                                   const ControlInput& in, StepSize dt) {
  const double h = dt.value();
  const double m = p.mass;
  const double iz = p.yaw_inertia;
  const double u = s.u;
  const double steer = in.steer;
  const double yaw_coupling = p.l_front * p.k_front - p.l_rear * p.k_rear;
  const double c_yaw = std::cos(s.yaw);
  const double s_yaw = std::sin(s.yaw);

  const double lat_den = m * u - h * (p.k_front + p.k_rear);
  const double yaw_den =
      iz * u - h * (p.l_front * p.l_front * p.k_front + p.l_rear * p.l_rear * p.k_rear);

  ProposedStep out;
  State6& n = out.state;
  n.x = s.x + h * (u * c_yaw - s.v * s_yaw);
  n.y = s.y + h * (s.v * c_yaw + u * s_yaw);
  n.yaw = s.yaw + h * s.yaw_rate;
  n.u = u + h * in.accel;
  if (n.u < 0.0) {
    n.u = 0.0;
    out.speed_clamped = true;
  }
  n.v = (m * u * s.v + h * yaw_coupling * s.yaw_rate - h * p.k_front * steer * u -
         h * m * u * u * s.yaw_rate) /
        lat_den;
  n.yaw_rate = (iz * u * s.yaw_rate + h * yaw_coupling * s.v -
                h * p.l_front * p.k_front * steer * u) /
               yaw_den;
  return out;
}

KinematicState step_kinematic(const VehicleParams& p, const KinematicState& s,
                              const ControlInput& in, StepSize dt) {
  const KinematicState d = kinematic_rhs(p, s, in);
  const double h = dt.value();
  return {s.x + h * d.x, s.y + h * d.y, s.yaw + h * d.yaw, s.u + h * d.u};
}

State6 lift_kinematic(const VehicleParams& p, const KinematicState& s, double steer) {
  const double turn = s.u * std::tan(steer);
  return {s.x, s.y, s.yaw, s.u, p.l_rear / p.wheelbase() * turn, turn / p.wheelbase()};
}

Trajectory reference_rk4(const VehicleParams& p, const State6& s0, const InputSchedule& schedule,
                         const ReferenceConfig& cfg) {
  if (!(cfg.fine_step > 0.0) || !(cfg.output_step >= cfg.fine_step) || !(cfg.duration > 0.0)) {
    throw std::invalid_argument("reference needs 0 < fine_step <= output_step and duration > 0");
  }
  const auto substeps =
      static_cast<std::size_t>(std::llround(cfg.output_step / cfg.fine_step));
  const double h = cfg.output_step / static_cast<double>(substeps);
  const std::size_t n = sample_count(cfg.duration, cfg.output_step);

  auto check_speed = [&](const State6& x, double t) {
    if (!(x.u >= cfg.min_speed)) {
      throw SingularityError("reference integration aborted: U fell below " +
                             std::to_string(cfg.min_speed) + " m/s at t = " +
                             std::to_string(t));
    }
  };

  Trajectory traj;
  traj.integrator = "reference_rk4";
  traj.dt = cfg.output_step;
  traj.samples.reserve(n);

  State6 x = s0;
  check_speed(x, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * cfg.output_step;
    const ControlInput in = schedule.at(t);
    traj.samples.push_back({t, x, in});
    if (k + 1 == n) break;
    for (std::size_t j = 0; j < substeps; ++j) {
      const State6 k1 = dynamic_rhs(p, x, in);
      const State6 k2 = dynamic_rhs(p, axpy(x, 0.5 * h, k1), in);
      const State6 k3 = dynamic_rhs(p, axpy(x, 0.5 * h, k2), in);
      const State6 k4 = dynamic_rhs(p, axpy(x, h, k3), in);
      x = {x.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
           x.y + h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
           x.yaw + h / 6.0 * (k1.yaw + 2.0 * k2.yaw + 2.0 * k3.yaw + k4.yaw),
           x.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
           x.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
           x.yaw_rate + h / 6.0 * (k1.yaw_rate + 2.0 * k2.yaw_rate + 2.0 * k3.yaw_rate +
                                   k4.yaw_rate)};
      check_speed(x, t + static_cast<double>(j + 1) * h);
    }
  }
  return traj;
}

}  // namespace stable_bicycle
