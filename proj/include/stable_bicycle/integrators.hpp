#ifndef STABLE_BICYCLE_INTEGRATORS_HPP
#define STABLE_BICYCLE_INTEGRATORS_HPP

#include <stdexcept>

#include "stable_bicycle/trajectory.hpp"
#include "stable_bicycle/vehicle.hpp"

namespace stable_bicycle {

/// Discrete time step. Only positivity and finiteness are enforced here;
/// scenario and config loaders additionally cap it at 1 s.
class StepSize {
 public:
  explicit StepSize(double seconds);
  double value() const { return seconds_; }

 private:
  double seconds_;
};

struct FixedPointConfig {
  int max_iters = 100;
  double tol = 1e-10;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// x + dt*f(x, u). No divergence guard: blowing up on stiff inputs is the
/// behaviour under study. Throws SingularityError at U <= 0.
State6 step_forward_euler(const VehicleParams& p, const State6& s, const ControlInput& in,
                          StepSize dt);

/// Solves x' = x + dt*f(x', u) by fixed-point iteration seeded with the
/// forward-Euler step. Throws SingularityError if s.u <= 0, and
/// ConvergenceError after cfg.max_iters or once an iterate reaches U <= 0.
State6 step_backward_euler(const VehicleParams& p, const State6& s, const ControlInput& in,
                           StepSize dt, const FixedPointConfig& cfg = {});

/// Residual max-norm |x' - x - dt*f(x', u)| of an implicit step.
double backward_euler_residual(const VehicleParams& p, const State6& s, const State6& next,
                               const ControlInput& in, StepSize dt);

struct ProposedStep {
  State6 state;
  bool speed_clamped = false;  // U + dt*a < 0 was clamped to 0
};

/**
 * @brief Explicit semi-implicit single-track step.
 *
 * Position, yaw and U advance by forward Euler (with U' = U + dt*a, i.e. the
 * V*omega and F_f*sin(delta) terms are dropped). V and omega are each
 * implicit in themselves only, which the linear tire model turns into a
 * closed-form quotient:
 *
 *   V'     = (mUV + dt(l_f k_f - l_r k_r) w - dt k_f d U - dt m U^2 w) / (mU - dt(k_f + k_r))
 *   omega' = (I_z U w + dt(l_f k_f - l_r k_r) V - dt l_f k_f d U) / (I_z U - dt(l_f^2 k_f + l_r^2 k_r))
 *
 * Both denominators are strictly positive for U >= 0 and negative
 * stiffnesses, so the map is total including U = 0.
 */
ProposedStep step_proposed_checked(const VehicleParams& p, const State6& s,
                                   const ControlInput& in, StepSize dt);

inline State6 step_proposed(const VehicleParams& p, const State6& s, const ControlInput& in,
                            StepSize dt) {
  return step_proposed_checked(p, s, in, dt).state;
}

/// Forward-Euler step of the kinematic model.
KinematicState step_kinematic(const VehicleParams& p, const KinematicState& s,
                              const ControlInput& in, StepSize dt);

/// Kinematic state lifted into State6: V and omega are the lateral velocity
/// and yaw rate implied by the no-slip constraint.
State6 lift_kinematic(const VehicleParams& p, const KinematicState& s, double steer);

struct ReferenceConfig {
  double fine_step = 1e-4;   // internal RK4 step [s]
  double output_step = 1e-3; // sampling interval [s]; inputs held over it
  double duration = 5.0;     // [s]
  double min_speed = 0.1;    // abort floor for U [m/s]
};

/**
 * Classical RK4 on dynamic_rhs, used as the in-repo ground truth. The
 * schedule is sampled at output instants (zero-order hold). Throws
 * SingularityError if U drops below cfg.min_speed.
 */
Trajectory reference_rk4(const VehicleParams& p, const State6& s0, const InputSchedule& schedule,
                         const ReferenceConfig& cfg);

}  // namespace stable_bicycle

#endif  // STABLE_BICYCLE_INTEGRATORS_HPP
