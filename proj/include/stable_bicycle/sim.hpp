#ifndef STABLE_BICYCLE_SIM_HPP
#define STABLE_BICYCLE_SIM_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stable_bicycle/integrators.hpp"
#include "stable_bicycle/trajectory.hpp"
#include "stable_bicycle/vehicle.hpp"

namespace stable_bicycle {

enum class Integrator { forward_euler, backward_euler, proposed, kinematic };

std::string_view to_string(Integrator i);
/// Throws std::invalid_argument for unknown names.
Integrator parse_integrator(std::string_view name);

/// Any |state component| above this, or a non-finite one, counts as divergence.
inline constexpr double kDivergenceThreshold = 1e6;

struct Scenario {
  std::string name = "scenario";
  VehicleParams params = VehicleParams::simulation_car();
  State6 initial;
  InputSchedule schedule;
  double dt = 0.01;
  double duration = 1.0;
  Integrator integrator = Integrator::proposed;
  FixedPointConfig fixed_point;
};

/// Throws std::invalid_argument (params, dt in (0, 1], duration > 0, U0 >= 0).
void validate_scenario(const Scenario& sc);

/**
 * Integrates the scenario with its selected stepper. Divergence (non-finite
 * or |x| > kDivergenceThreshold, or a singularity / non-convergence raised
 * by the continuous-model steppers) is recorded in the trajectory metadata
 * and truncates the samples; it is not an error.
 */
Trajectory run_scenario(const Scenario& sc);

/// Same as run_scenario but with a per-step steering offset added to the
/// scheduled input (offsets[k] applies over step k; missing entries are 0).
Trajectory run_scenario_with_steer_offsets(const Scenario& sc,
                                           const std::vector<double>& offsets);

struct NoiseSpec {
  double sigma = 0.0;  // [rad]
  std::uint64_t seed = 0;
};

struct NoiseRun {
  Trajectory trajectory;
  Trajectory clean;
  std::vector<double> deviation;  // position distance to the noise-free run, per sample
};

/// Adds one N(0, sigma^2) draw per control interval to the steering input.
NoiseRun run_noise_robustness(const Scenario& base, const NoiseSpec& noise);

/// Root mean square of the (X, Y) distance over the common, time-matched
/// samples. Throws std::invalid_argument if the sample rates differ.
double rms_position_error(const Trajectory& a, const Trajectory& b);

struct RmsReport {
  double u0 = 0.0;
  double steer = 0.0;
  double kinematic_rms = 0.0;
  double dynamic_rms = 0.0;
  double improvement_pct = 0.0;  // 100 * (kinematic - dynamic) / kinematic
  std::optional<std::string> error;  // set when the reference aborted for this cell
};

struct AccuracyConfig {
  double duration = 5.0;
  double dt = 1e-3;
  double fine_step = 1e-4;
  double steer_ramp = 0.0;  // 0 means an instantaneous step at t = 0
  unsigned jobs = 1;
};

/// Proposed and kinematic models against the RK4 reference for every
/// (U0, steer) cell; a constant steer is applied from rest on straight-line
/// initial conditions.
std::vector<RmsReport> accuracy_table(const VehicleParams& p, const std::vector<double>& u0s,
                                      const std::vector<double>& steers,
                                      const AccuracyConfig& cfg = {});

struct LatencyStats {
  double mean_us = 0.0;
  double median_us = 0.0;
  double p95_us = 0.0;
  double total_ms = 0.0;
};

struct BenchmarkResult {
  std::size_t n_steps = 0;
  LatencyStats proposed;
  LatencyStats kinematic;
};

/// Per-step wall-clock latency of step_proposed and step_kinematic from a
/// 5 m/s start under a 0.2674 rad step steer. Single-threaded.
BenchmarkResult timing_benchmark(const VehicleParams& p, std::size_t n_steps);

}  // namespace stable_bicycle

#endif  // STABLE_BICYCLE_SIM_HPP
