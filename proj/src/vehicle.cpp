#include "stable_bicycle/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stable_bicycle {

VehicleParams VehicleParams::simulation_car() {
  return {.mass = 1412.0,
          .yaw_inertia = 1536.7,
          .k_front = -128916.0,
          .k_rear = -85944.0,
          .l_front = 1.06,
          .l_rear = 1.85};
}

VehicleParams VehicleParams::test_suv() {
  return {.mass = 1892.0,
          .yaw_inertia = 3058.0,
          .k_front = -186000.0,
          .k_rear = -183000.0,
          .l_front = 1.4,
          .l_rear = 1.5};
}

VehicleParams validate_params(const VehicleParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ParamError(what);
  };
  // NaN fails every comparison below, so it is rejected too.
  require(p.mass > 0.0 && std::isfinite(p.mass), "m must be positive");
  require(p.yaw_inertia > 0.0 && std::isfinite(p.yaw_inertia), "I_z must be positive");
  require(p.k_front < 0.0 && std::isfinite(p.k_front), "k_f must be negative");
  require(p.k_rear < 0.0 && std::isfinite(p.k_rear), "k_r must be negative");
  require(p.l_front > 0.0 && std::isfinite(p.l_front), "l_f must be positive");
  require(p.l_rear > 0.0 && std::isfinite(p.l_rear), "l_r must be positive");
  return p;
}

TireForces tire_forces(const VehicleParams& p, const State3& s, double steer) {
  if (!(s.u > 0.0)) {
    throw SingularityError(
        "tire slip angle undefined at U <= 0 (low-speed singularity of the continuous model)");
  }
  const double front_slip = (s.v + p.l_front * s.yaw_rate) / s.u - steer;
  const double rear_slip = (s.v - p.l_rear * s.yaw_rate) / s.u;
  return {p.k_front * front_slip, p.k_rear * rear_slip};
}

State6 dynamic_rhs(const VehicleParams& p, const State6& s, const ControlInput& in) {
  const TireForces f = tire_forces(p, lateral_part(s), in.steer);
  const double c_yaw = std::cos(s.yaw);
  const double s_yaw = std::sin(s.yaw);
  const double c_steer = std::cos(in.steer);
  const double s_steer = std::sin(in.steer);

  State6 d;
  d.x = s.u * c_yaw - s.v * s_yaw;
  d.y = s.u * s_yaw + s.v * c_yaw;
  d.yaw = s.yaw_rate;
  d.u = in.accel + s.v * s.yaw_rate - f.front * s_steer / p.mass;
  d.v = -s.u * s.yaw_rate + (f.front * c_steer + f.rear) / p.mass;
  d.yaw_rate = (p.l_front * f.front * c_steer - p.l_rear * f.rear) / p.yaw_inertia;
  return d;
}

KinematicState kinematic_rhs(const VehicleParams& p, const KinematicState& s,
                             const ControlInput& in) {
  if (!(std::abs(in.steer) < std::numbers::pi / 2)) {
    throw std::invalid_argument("kinematic model requires |delta| < pi/2");
  }
  const double turn = s.u * std::tan(in.steer);
  const double rear_share = p.l_rear / p.wheelbase();
  const double c_yaw = std::cos(s.yaw);
  const double s_yaw = std::sin(s.yaw);

  KinematicState d;
  d.x = s.u * c_yaw - rear_share * turn * s_yaw;
  d.y = s.u * s_yaw + rear_share * turn * c_yaw;
  d.yaw = turn / p.wheelbase();
  d.u = in.accel;
  return d;
}

WheelVelocities wheel_velocities(const VehicleParams& p, const State3& s, double steer) {
  const double hub_lateral = s.v + p.l_front * s.yaw_rate;
  const double c = std::cos(steer);
  const double sn = std::sin(steer);
  return {.u_front = s.u * c + hub_lateral * sn,
          .v_front = -s.u * sn + hub_lateral * c,
          .u_rear = s.u,
          .v_rear = s.v - p.l_rear * s.yaw_rate};
}

HysteresisStepResult hysteresis_step(const HysteresisState& h, const WheelVelocities& w,
                                     double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("T_s must be positive");
  const double uf = std::max(std::abs(w.u_front), h.speed_floor);
  const double ur = std::max(std::abs(w.u_rear), h.speed_floor);

  HysteresisState next = h;
  next.kappa_front += dt * (w.v_front - h.kappa_front * uf) / h.relaxation_length;
  next.kappa_rear += dt * (w.v_rear - h.kappa_rear * ur) / h.relaxation_length;
  return {next, std::atan(next.kappa_front), std::atan(next.kappa_rear)};
}

}  // namespace stable_bicycle
