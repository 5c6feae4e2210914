#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "stable_bicycle/integrators.hpp"

namespace sb = stable_bicycle;

namespace {

const sb::VehicleParams kCar = sb::VehicleParams::simulation_car();

oracle::Vec6 as_vec(const sb::State6& s) { return {s.x, s.y, s.yaw, s.u, s.v, s.yaw_rate}; }

bool all_finite(const sb::State6& s) {
  for (double v : as_vec(s)) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

sb::VehicleParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mass(300.0, 5000.0), inertia(200.0, 8000.0),
      stiff(1e3, 5e5), arm(0.3, 3.0);
  return sb::validate_params(
      {mass(rng), inertia(rng), -stiff(rng), -stiff(rng), arm(rng), arm(rng)});
}

}  // namespace

TEST(StepSize, RejectsNonPositiveAndNonFinite) {
  EXPECT_THROW(sb::StepSize{0.0}, std::invalid_argument);
  EXPECT_THROW(sb::StepSize{-0.1}, std::invalid_argument);
  EXPECT_THROW(sb::StepSize{NAN}, std::invalid_argument);
  EXPECT_THROW(sb::StepSize{INFINITY}, std::invalid_argument);
  EXPECT_EQ(sb::StepSize{0.01}.value(), 0.01);
}

TEST(ForwardEuler, StraightRolling) {
  const auto s = sb::step_forward_euler(kCar, {0, 0, 0, 10, 0, 0}, {0, 0}, sb::StepSize{0.01});
  EXPECT_NEAR(s.x, 0.1, 1e-15);
  EXPECT_EQ(s.y, 0.0);
  EXPECT_EQ(s.u, 10.0);
  EXPECT_EQ(s.v, 0.0);
  EXPECT_EQ(s.yaw_rate, 0.0);
}

TEST(ForwardEuler, LateralVelocityExample) {
  const auto s = sb::step_forward_euler(kCar, {0, 0, 0, 10, 0.5, 0}, {0, 0}, sb::StepSize{0.01});
  const auto o = oracle::euler(oracle::kSimulationCar, {0, 0, 0, 10, 0.5, 0}, 0, 0, 0.01);
  EXPECT_NEAR(s.v, o[4], 1e-14);
  EXPECT_NEAR(s.yaw_rate, o[5], 1e-14);
  EXPECT_NEAR(s.v, 0.42392, 1e-5);
  EXPECT_NEAR(s.yaw_rate, 0.00727, 1e-5);
}

TEST(ForwardEuler, SingularAtZeroSpeed) {
  EXPECT_THROW(sb::step_forward_euler(kCar, {0, 0, 0, 0, 0, 0}, {1, 0}, sb::StepSize{0.01}),
               sb::SingularityError);
}

TEST(BackwardEuler, StraightRollingEqualsForwardEuler) {
  const sb::State6 s{1, 2, 0.3, 10, 0, 0};
  const auto be = sb::step_backward_euler(kCar, s, {0, 0}, sb::StepSize{0.01});
  const auto fe = sb::step_forward_euler(kCar, s, {0, 0}, sb::StepSize{0.01});
  EXPECT_EQ(be, fe);
}

TEST(BackwardEuler, ResidualBelowTolerance) {
  const sb::State6 s{0, 0, 0, 10, 0.5, 0};
  const sb::StepSize dt{0.01};
  const auto next = sb::step_backward_euler(kCar, s, {0, 0}, dt, {100, 1e-12});
  // Residual recomputed with the oracle vector field.
  const auto f = oracle::rhs(oracle::kSimulationCar, as_vec(next), 0, 0);
  const auto xn = as_vec(next), x0 = as_vec(s);
  double worst = 0.0;
  for (int i = 0; i < 6; ++i) worst = std::max(worst, std::abs(xn[i] - x0[i] - 0.01 * f[i]));
  EXPECT_LT(worst, 1e-10);
  EXPECT_LT(sb::backward_euler_residual(kCar, s, next, {0, 0}, dt), 1e-10);
}

TEST(BackwardEuler, AbsurdStepDoesNotConverge) {
  EXPECT_THROW(sb::step_backward_euler(kCar, {0, 0, 0, 10, 0.5, 0}, {0, 0}, sb::StepSize{10}),
               sb::ConvergenceError);
  sb::FixedPointConfig tight;
  tight.max_iters = 2;
  tight.tol = 1e-15;
  EXPECT_THROW(sb::step_backward_euler(kCar, {0, 0, 0, 10, 0.5, 0}, {0, 0}, sb::StepSize{0.01},
                                       tight),
               sb::ConvergenceError);
}

TEST(BackwardEuler, SingularAtZeroSpeed) {
  EXPECT_THROW(sb::step_backward_euler(kCar, {0, 0, 0, 0, 0, 0}, {0, 0}, sb::StepSize{0.01}),
               sb::SingularityError);
}

TEST(Proposed, StraightRolling) {
  const auto s = sb::step_proposed(kCar, {0, 0, 0, 10, 0, 0}, {0, 0}, sb::StepSize{0.1});
  EXPECT_EQ(s, (sb::State6{1, 0, 0, 10, 0, 0}));
}

TEST(Proposed, ZeroSpeedHandValue) {
  for (double dt : {1e-4, 0.001, 0.01, 0.1, 1.0}) {
    const auto s = sb::step_proposed(kCar, {0, 0, 0, 0, 0, 0.1}, {0, 0}, sb::StepSize{dt});
    // V' = c*w / -(kf + kr), with c = lf kf - lr kr.
    const double c = 1.06 * -128916.0 - 1.85 * -85944.0;
    EXPECT_NEAR(s.v, c * 0.1 / (128916.0 + 85944.0), 1e-15);
    EXPECT_NEAR(s.v, 0.010400, 1e-6);
    EXPECT_EQ(s.yaw_rate, 0.0);
    EXPECT_NEAR(s.yaw, 0.1 * dt, 1e-15);
  }
}

TEST(Proposed, MatchesOracleOnRandomStates) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const sb::State6 s{uni(rng) * 100, uni(rng) * 100, uni(rng) * 10,
                       0.05 + 25 * std::abs(uni(rng)), uni(rng) * 4, uni(rng) * 3};
    const sb::ControlInput in{uni(rng) * 5, uni(rng) * 0.78};
    const double dt = 0.001 + 0.099 * std::abs(uni(rng));
    const auto got = as_vec(sb::step_proposed(kCar, s, in, sb::StepSize{dt}));
    const auto want = oracle::proposed(oracle::kSimulationCar, as_vec(s), in.accel, in.steer, dt);
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(got[k], want[k], 1e-9 * (1 + std::abs(want[k])));
  }
}

TEST(Proposed, SpeedClampFlag) {
  const auto r = sb::step_proposed_checked(kCar, {0, 0, 0, 0.1, 0, 0}, {-5, 0}, sb::StepSize{0.1});
  EXPECT_TRUE(r.speed_clamped);
  EXPECT_EQ(r.state.u, 0.0);
  const auto ok = sb::step_proposed_checked(kCar, {0, 0, 0, 1, 0, 0}, {-5, 0}, sb::StepSize{0.1});
  EXPECT_FALSE(ok.speed_clamped);
  EXPECT_NEAR(ok.state.u, 0.5, 1e-15);
}

TEST(Proposed, DifferenceFromForwardEulerIsSecondOrder) {
  const sb::State6 s{0, 0, 0, 10, 0.5, 0};
  auto diff = [&](double dt) {
    const auto p = sb::step_proposed(kCar, s, {0, 0}, sb::StepSize{dt});
    const auto f = sb::step_forward_euler(kCar, s, {0, 0}, sb::StepSize{dt});
    return std::hypot(p.v - f.v, p.yaw_rate - f.yaw_rate);
  };
  const double ratio = diff(1e-3) / diff(5e-4);
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.5);
}

TEST(Proposed, TotalIncludingZeroSpeed) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_real_distribution<double> step(1e-6, 1.0);
  for (int i = 0; i < 100000; ++i) {
    const double u = (i % 4 == 0) ? 0.0 : 30.0 * std::abs(uni(rng));
    const sb::State6 s{uni(rng) * 1e3, uni(rng) * 1e3, uni(rng) * 50, u, uni(rng) * 10,
                       uni(rng) * 5};
    const sb::ControlInput in{uni(rng) * 5, uni(rng) * 1.5};
    ASSERT_TRUE(all_finite(sb::step_proposed(kCar, s, in, sb::StepSize{step(rng)})));
  }
}

TEST(Proposed, DenominatorsPositiveForValidParams) {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> speed(0.0, 60.0), step(1e-9, 1.0);
  for (int i = 0; i < 1000000; ++i) {
    const auto p = random_params(rng);
    const double u = (i % 10 == 0) ? 0.0 : speed(rng);
    const double dt = step(rng);
    const double d1 = p.mass * u - dt * (p.k_front + p.k_rear);
    const double d2 = p.yaw_inertia * u - dt * (p.l_front * p.l_front * p.k_front +
                                                p.l_rear * p.l_rear * p.k_rear);
    ASSERT_GT(d1, 0.0);
    ASSERT_GT(d2, 0.0);
    if (i % 1000 == 0) {
      ASSERT_TRUE(all_finite(sb::step_proposed(p, {0, 0, 0, u, 0.3, 0.2}, {1, 0.2},
                                               sb::StepSize{dt})));
    }
  }
}

TEST(Proposed, GlobalErrorShrinksWithStep) {
  // U0 = 10, constant 0.05 rad steer, 2 s; oracle RK4 at 1e-4 s.
  oracle::Vec6 ref{0, 0, 0, 10, 0, 0};
  for (int k = 0; k < 20000; ++k) ref = oracle::rk4(oracle::kSimulationCar, ref, 0, 0.05, 1e-4);
  double prev = INFINITY;
  for (double dt : {0.1, 0.01, 0.001}) {
    sb::State6 s{0, 0, 0, 10, 0, 0};
    const int n = static_cast<int>(std::lround(2.0 / dt));
    for (int k = 0; k < n; ++k) s = sb::step_proposed(kCar, s, {0, 0.05}, sb::StepSize{dt});
    const double err = std::hypot(s.x - ref[0], s.y - ref[1]);
    EXPECT_LT(err, prev) << "dt=" << dt;
    prev = err;
  }
}

TEST(ZeroLateral, SchemesAgreeOnLongitudinalUpdate) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const sb::State6 s{uni(rng) * 10, uni(rng) * 10, uni(rng) * 3, 1 + 20 * std::abs(uni(rng)), 0,
                       0};
    const sb::StepSize dt{0.01};
    const auto fe = sb::step_forward_euler(kCar, s, {0, 0}, dt);
    const auto be = sb::step_backward_euler(kCar, s, {0, 0}, dt);
    const auto pr = sb::step_proposed(kCar, s, {0, 0}, dt);
    EXPECT_EQ(fe, pr);
    EXPECT_EQ(fe, be);
    const double a = 2 * uni(rng);
    const auto fea = sb::step_forward_euler(kCar, s, {a, 0}, dt);
    const auto pra = sb::step_proposed(kCar, s, {a, 0}, dt);
    EXPECT_EQ(fea, pra);
  }
}

TEST(Kinematic, StraightStep) {
  const auto s = sb::step_kinematic(kCar, {0, 0, 0, 5}, {0, 0}, sb::StepSize{0.1});
  EXPECT_EQ(s, (sb::KinematicState{0.5, 0, 0, 5}));
}

TEST(Kinematic, SteeredStep) {
  const auto s = sb::step_kinematic(kCar, {0, 0, 0, 5}, {0, 0.1}, sb::StepSize{0.1});
  EXPECT_NEAR(s.yaw, 0.1 * 5 * std::tan(0.1) / 2.91, 1e-12);
  EXPECT_NEAR(s.y, 0.1 * 1.85 / 2.91 * 5 * std::tan(0.1), 1e-12);
  EXPECT_NEAR(s.yaw, 0.017240, 1e-6);
  EXPECT_NEAR(s.y, 0.031896, 5e-5);
}

TEST(Kinematic, NoMotionAtRest) {
  const auto s = sb::step_kinematic(kCar, {3, 4, 0.5, 0}, {1.5, 0.3}, sb::StepSize{0.1});
  EXPECT_EQ(s.x, 3.0);
  EXPECT_EQ(s.y, 4.0);
  EXPECT_EQ(s.yaw, 0.5);
  EXPECT_NEAR(s.u, 0.15, 1e-15);
}

TEST(Kinematic, LiftUsesNoSlipLateralStates) {
  const auto s = sb::lift_kinematic(kCar, {1, 2, 0.3, 8}, 0.1);
  EXPECT_EQ(s.x, 1.0);
  EXPECT_EQ(s.u, 8.0);
  EXPECT_NEAR(s.v, 1.85 / 2.91 * 8 * std::tan(0.1), 1e-12);
  EXPECT_NEAR(s.yaw_rate, 8 * std::tan(0.1) / 2.91, 1e-12);
}

TEST(ReferenceRk4, StraightLine) {
  const auto tr = sb::reference_rk4(kCar, {0, 0, 0, 10, 0, 0}, sb::InputSchedule{},
                                    {1e-4, 1e-3, 1.0, 0.1});
  ASSERT_EQ(tr.size(), 1001u);
  EXPECT_NEAR(tr.final_state().x, 10.0, 1e-9);
  EXPECT_EQ(tr.final_state().y, 0.0);
  EXPECT_EQ(tr.final_state().v, 0.0);
  EXPECT_EQ(tr.final_state().yaw_rate, 0.0);
  EXPECT_NEAR(tr.samples.back().t, 1.0, 1e-12);
}

TEST(ReferenceRk4, MatchesOracleIntegration) {
  const auto tr = sb::reference_rk4(kCar, {0, 0, 0, 5, 0, 0},
                                    sb::InputSchedule::constant({0, 0.05}), {1e-4, 1e-3, 1.0, 0.1});
  oracle::Vec6 s{0, 0, 0, 5, 0, 0};
  for (int k = 0; k < 10000; ++k) s = oracle::rk4(oracle::kSimulationCar, s, 0, 0.05, 1e-4);
  EXPECT_NEAR(tr.final_state().x, s[0], 1e-9);
  EXPECT_NEAR(tr.final_state().y, s[1], 1e-9);
}

TEST(ReferenceRk4, SelfConvergent) {
  const auto sched = sb::InputSchedule::constant({0, 0.05});
  const auto a = sb::reference_rk4(kCar, {0, 0, 0, 5, 0, 0}, sched, {1e-4, 1e-3, 5.0, 0.1});
  const auto b = sb::reference_rk4(kCar, {0, 0, 0, 5, 0, 0}, sched, {5e-5, 1e-3, 5.0, 0.1});
  EXPECT_LT(std::hypot(a.final_state().x - b.final_state().x,
                       a.final_state().y - b.final_state().y),
            1e-6);
}

TEST(ReferenceRk4, AbortsBelowSpeedFloor) {
  EXPECT_THROW(sb::reference_rk4(kCar, {0, 0, 0, 1, 0, 0}, sb::InputSchedule::constant({-2, 0}),
                                 {1e-4, 1e-3, 2.0, 0.1}),
               sb::SingularityError);
}
