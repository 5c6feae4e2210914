#ifndef STABLE_BICYCLE_VEHICLE_HPP
#define STABLE_BICYCLE_VEHICLE_HPP

#include <stdexcept>
#include <string>

namespace stable_bicycle {

/// Raised when the continuous-time tire model is evaluated at U <= 0,
/// where the slip-angle estimate (V +/- l*omega)/U is undefined.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised by validate_params(); the message names the violated field.
class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * @brief Single-track vehicle constants.
 *
 * Cornering stiffnesses are stored negative, so a positive slip angle
 * produces a negative lateral force.
 */
struct VehicleParams {
  double mass;         // [kg]
  double yaw_inertia;  // [kg m^2]
  double k_front;      // front axle cornering stiffness [N/rad], < 0
  double k_rear;       // rear axle cornering stiffness [N/rad], < 0
  double l_front;      // C.G. to front axle [m]
  double l_rear;       // C.G. to rear axle [m]

  double wheelbase() const { return l_front + l_rear; }

  /// C-class hatchback used for the simulation studies.
  static VehicleParams simulation_car();
  /// SUV identified for the on-road experiments.
  static VehicleParams test_suv();
};

/// Returns p unchanged if every invariant holds, otherwise throws ParamError
/// naming the first violated one (e.g. "k_f must be negative").
VehicleParams validate_params(const VehicleParams& p);

struct State6 {
  double x = 0.0;         // [m]
  double y = 0.0;         // [m]
  double yaw = 0.0;       // [rad], unwrapped
  double u = 0.0;         // longitudinal velocity [m/s]
  double v = 0.0;         // lateral velocity [m/s]
  double yaw_rate = 0.0;  // [rad/s]

  bool operator==(const State6&) const = default;
};

struct State3 {
  double u = 0.0;
  double v = 0.0;
  double yaw_rate = 0.0;
};

inline State3 lateral_part(const State6& s) { return {s.u, s.v, s.yaw_rate}; }

struct KinematicState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double u = 0.0;

  bool operator==(const KinematicState&) const = default;
};

struct ControlInput {
  double accel = 0.0;  // [m/s^2]
  double steer = 0.0;  // front wheel angle [rad]
};

struct TireForces {
  double front;  // [N]
  double rear;   // [N]
};

/// Linear lateral tire forces. Throws SingularityError for U <= 0.
TireForces tire_forces(const VehicleParams& p, const State3& s, double steer);

/// Full continuous-time single-track vector field (includes a + V*omega in U').
State6 dynamic_rhs(const VehicleParams& p, const State6& s, const ControlInput& in);

/// No-slip kinematic vector field. Requires |steer| < pi/2.
KinematicState kinematic_rhs(const VehicleParams& p, const KinematicState& s,
                             const ControlInput& in);

// Low-pass filtered slip baseline with a lower speed bound. Kept as a
// comparison point for the low-speed problem; not used by the integrators.

struct HysteresisState {
  double kappa_front = 0.0;
  double kappa_rear = 0.0;
  double relaxation_length = 0.5;  // L_y [m]
  double speed_floor = 1.0;        // U_low [m/s]
};

/// Tangential (u) and normal (v) velocities in each tire's centre plane.
struct WheelVelocities {
  double u_front = 0.0;
  double v_front = 0.0;
  double u_rear = 0.0;
  double v_rear = 0.0;
};

/// Front-wheel velocities are the body-frame hub velocity rotated by -steer.
WheelVelocities wheel_velocities(const VehicleParams& p, const State3& s, double steer);

struct HysteresisStepResult {
  HysteresisState state;
  double slip_front;  // arctan(kappa_front) [rad]
  double slip_rear;
};

/// One forward-Euler step of d(kappa)/dt = (V - kappa*max(|U|, U_low)) / L_y.
HysteresisStepResult hysteresis_step(const HysteresisState& h, const WheelVelocities& w,
                                     double dt);

}  // namespace stable_bicycle

#endif  // STABLE_BICYCLE_VEHICLE_HPP
