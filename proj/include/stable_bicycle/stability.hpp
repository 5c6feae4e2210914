#ifndef STABLE_BICYCLE_STABILITY_HPP
#define STABLE_BICYCLE_STABILITY_HPP

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "stable_bicycle/integrators.hpp"
#include "stable_bicycle/trajectory.hpp"
#include "stable_bicycle/vehicle.hpp"

namespace stable_bicycle {

struct Vec2 {
  double a = 0.0;
  double b = 0.0;
};

/// Row-major 2x2 matrix.
struct Mat2 {
  double m00 = 0.0, m01 = 0.0;
  double m10 = 0.0, m11 = 0.0;

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  Vec2 operator*(const Vec2& x) const { return {m00 * x.a + m01 * x.b, m10 * x.a + m11 * x.b}; }
  Mat2 operator*(const Mat2& o) const {
    return {m00 * o.m00 + m01 * o.m10, m00 * o.m01 + m01 * o.m11,
            m10 * o.m00 + m11 * o.m10, m10 * o.m01 + m11 * o.m11};
  }
};

/**
 * @brief Sensitivity of the step's (V', omega') to (V, omega).
 *
 * This is the lower-right block of the (U, V, omega) step Jacobian. It
 * depends only on speed and dt, not on steering or the lateral state. The
 * first row is evaluated at `u_row1`, the second at `u_row2` (the two
 * mean-value points may differ).
 */
Mat2 a_hat(const VehicleParams& p, double u_row1, double u_row2, double dt);
inline Mat2 a_hat(const VehicleParams& p, double u_mid, double dt) {
  return a_hat(p, u_mid, u_mid, dt);
}

/// d(V')/dU and d(omega')/dU at the given mean-value state.
Vec2 b_vector(const VehicleParams& p, const State3& mid, double steer, double dt);

/// Full 3x3 Jacobian of the reduced (U, V, omega) step, row-major.
struct JacobianBlocks {
  Mat2 a_hat;
  Vec2 b;
  std::array<double, 9> full() const {
    return {1.0, 0.0, 0.0, b.a, a_hat.m00, a_hat.m01, b.b, a_hat.m10, a_hat.m11};
  }
};
JacobianBlocks jacobian_blocks(const VehicleParams& p, const State3& mid, double steer,
                               double dt);

/// Largest singular value, closed form from the eigenvalues of M^T M.
double spectral_norm_2x2(const Mat2& m);

/// Largest eigenvalue modulus (reported alongside the norm as a diagnostic).
double spectral_radius_2x2(const Mat2& m);

struct SweepCell {
  double u_mid;
  double dt;
  double norm;
  double radius;
};

struct StabilitySweepResult {
  double u_min = 0.0;
  double u_max = 0.0;
  std::size_t n_grid = 0;
  std::vector<double> dts;
  double tolerance = 1e-12;
  std::vector<SweepCell> cells;  // dt-major, speed-minor
  double max_norm = 0.0;
  std::vector<std::size_t> violations;  // indices into cells with norm > 1 + tolerance

  bool holds() const { return violations.empty(); }
};

struct SweepOptions {
  double tolerance = 1e-12;
  unsigned jobs = 1;
};

/// Evaluates ||a_hat(U, dt)||_2 on a uniform speed grid for every dt.
StabilitySweepResult sweep_condition1(const VehicleParams& p, double u_min, double u_max,
                                      std::size_t n_grid, const std::vector<double>& dts,
                                      const SweepOptions& opts = {});

struct PairwiseSweepResult {
  double max_norm = 0.0;
  double worst_u_row1 = 0.0;
  double worst_u_row2 = 0.0;
  double worst_dt = 0.0;
};

/// Worst norm over independently chosen row speeds on an n x n grid.
PairwiseSweepResult sweep_condition1_pairwise(const VehicleParams& p, double u_min,
                                              double u_max, std::size_t n_grid,
                                              const std::vector<double>& dts);

enum class Stepper { forward_euler, backward_euler, proposed };

/**
 * Runs two trajectories from s0 and s0 + perturbation under the same
 * schedule and returns |(dU, dV, domega)| at steps 0..steps. Once either
 * run fails (singularity, non-convergence or non-finite state) the remaining
 * entries are +inf.
 */
std::vector<double> error_propagation_demo(const VehicleParams& p, const State6& s0,
                                           const State3& perturbation,
                                           const InputSchedule& schedule, StepSize dt,
                                           std::size_t steps,
                                           Stepper stepper = Stepper::proposed);

}  // namespace stable_bicycle

#endif  // STABLE_BICYCLE_STABILITY_HPP
