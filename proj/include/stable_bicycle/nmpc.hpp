#ifndef STABLE_BICYCLE_NMPC_HPP
#define STABLE_BICYCLE_NMPC_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "stable_bicycle/trajectory.hpp"
#include "stable_bicycle/vehicle.hpp"

namespace stable_bicycle {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

using StateWeights = std::array<double, 6>;  // ordered X, Y, yaw, U, V, omega

struct SolverSettings {
  int max_iters = 200;          // total projected-gradient iterations per solve
  double penalty_init = 100.0;
  double penalty_growth = 10.0; // applied whenever a stationary point still violates
  double penalty_max = 1e8;
  double safety_buffer = 0.5;   // [m] added to D_s inside the penalty only
  double violation_tol = 1e-6;
  double stationarity_tol = 1e-7;
  double fd_step = 1e-6;        // relative to each input's box width
  bool warm_start = true;
};

/// Receding-horizon problem: tracking cost, obstacle exclusion and box bounds.
struct OcpSpec {
  int horizon = 20;          // N_p
  int control_horizon = 1;   // N_c
  StateWeights q{100.0, 100.0, 0.0, 0.0, 0.0, 0.0};
  std::array<double, 2> r{10.0, 500.0};  // a, delta
  StateWeights q_safe{1.0, 1.0, 0.0, 0.0, 0.0, 0.0};
  double safe_distance = 8.0;  // D_s
  StateWeights x_min;
  StateWeights x_max;
  ControlInput u_min;
  ControlInput u_max;
  double dt = 0.1;
  SolverSettings solver;

  /// Stop-start configuration: N_p = 20, N_c = 1, T_s = 0.1 and the bounds
  /// U in [0, 20], |V| <= 4, |omega| <= 3, a in [-5, 2], |delta| <= pi/4.
  static OcpSpec stop_start();
};

/// Throws std::invalid_argument on a malformed spec.
void validate_ocp(const OcpSpec& spec);

struct ReferenceGenerator {
  Point2 target;
  double speed = 6.0;
};

/// Points k = 1..N advancing from the current C.G. toward the target at the
/// reference speed, stopping at the target. Only X and Y are meaningful to
/// the cost; yaw holds the line heading and U the reference speed.
std::vector<State6> build_reference(const ReferenceGenerator& rg, const State6& current,
                                    int horizon, double dt);

struct ObstacleState {
  Point2 position;
  std::optional<Point2> relocate_to;
  /// Relocation fires at this time if set, otherwise once the vehicle speed
  /// falls below `stop_speed`.
  std::optional<double> relocate_at;
  double stop_speed = 0.05;
};

struct CostBreakdown {
  double cost = 0.0;
  std::vector<double> margins;  // (x - x_obs)^T Q_s (x - x_obs) - D_s^2 per state
};

/// Sum of (x_k - ref_k)^T Q (x_k - ref_k) + u_k^T R u_k over equal-length
/// sequences. Throws std::invalid_argument on a length mismatch.
CostBreakdown evaluate_ocp_cost(const OcpSpec& spec, const std::vector<State6>& states,
                                const std::vector<ControlInput>& inputs,
                                const std::vector<State6>& refs, Point2 obstacle);

/// Predicted states x_1..x_N under the proposed step.
std::vector<State6> rollout(const VehicleParams& p, const OcpSpec& spec, const State6& x0,
                            const std::vector<ControlInput>& inputs);

enum class SolveStatus { converged, iteration_capped, infeasible_relaxed };
std::string_view to_string(SolveStatus s);

struct SolveResult {
  std::vector<ControlInput> inputs;  // length N_p, within bounds exactly
  double cost = 0.0;                 // tracking + input cost (no penalty)
  double violation = 0.0;            // worst max(0, D_s - distance) and bound excess
  int iterations = 0;
  SolveStatus status = SolveStatus::iteration_capped;
};

/**
 * Single-shooting projected gradient with an exterior penalty on the
 * obstacle and state bounds. Input boxes are enforced by projection.
 * `initial_guess` (length N_p, projected) seeds the iteration; pass an
 * empty vector for a zero start.
 */
SolveResult solve_ocp(const VehicleParams& p, const OcpSpec& spec, const State6& x0,
                      const std::vector<State6>& refs, Point2 obstacle,
                      const std::vector<ControlInput>& initial_guess = {});

/// Previous solution advanced by `shift` steps, padding with the last input.
std::vector<ControlInput> shift_warm_start(const std::vector<ControlInput>& prev,
                                           std::size_t shift);

struct SolveLogEntry {
  double t = 0.0;
  double cost = 0.0;
  double violation = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::converged;
  Point2 obstacle;
};

struct ClosedLoopResult {
  Trajectory trajectory;            // logged states with the applied inputs
  std::vector<SolveLogEntry> log;   // one entry per applied input
  std::vector<Point2> obstacle_at;  // active obstacle per trajectory sample
  std::optional<double> stop_time;  // first sample with U below the stop speed
  std::optional<double> relocation_time;
  double min_obstacle_distance = 0.0;  // C.G. to active obstacle, over all samples
};

ClosedLoopResult run_closed_loop(const VehicleParams& p, const OcpSpec& spec,
                                 const ReferenceGenerator& rg, ObstacleState obstacle,
                                 const State6& x0, double duration);

/// Closed loop without any obstacle.
ClosedLoopResult run_closed_loop(const VehicleParams& p, const OcpSpec& spec,
                                 const ReferenceGenerator& rg, const State6& x0,
                                 double duration);

}  // namespace stable_bicycle

#endif  // STABLE_BICYCLE_NMPC_HPP
