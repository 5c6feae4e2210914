// Acceptance checks. One line per criterion; exits nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "oracle.hpp"
#include "stable_bicycle/integrators.hpp"
#include "stable_bicycle/nmpc.hpp"
#include "stable_bicycle/sim.hpp"
#include "stable_bicycle/stability.hpp"

namespace sb = stable_bicycle;

namespace {

const sb::VehicleParams kCar = sb::VehicleParams::simulation_car();

int g_failed = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failed;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

bool finite(const sb::State6& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.yaw) && std::isfinite(s.u) &&
         std::isfinite(s.v) && std::isfinite(s.yaw_rate);
}

void condition1_sweep() {
  Stopwatch sw;
  const auto r = sb::sweep_condition1(kCar, 0.0, 25.0, 2501, {0.001, 0.01, 0.1},
                                      {.tolerance = 1e-12, .jobs = jobs()});
  const double t = sw.seconds();
  // Independent cross-check of the worst cell.
  const auto& worst = *std::max_element(r.cells.begin(), r.cells.end(),
                                        [](auto& a, auto& b) { return a.norm < b.norm; });
  const double oracle_norm = oracle::power_norm(
      oracle::fd_lateral_jacobian(oracle::kSimulationCar, worst.u_mid, 0.0, 0.0, 0.0, worst.dt));
  const bool pass = r.max_norm <= 1.0 + 1e-12 && r.violations.empty() && t < 5.0;
  report(1, pass, "condition-1 sweep",
         fmt("max_norm=%.9g at U=%.2f T_s=%g (oracle %.9g) violations=%zu of %zu runtime=%.3fs "
             "(need max_norm<=1+1e-12, 0 violations, <5s)",
             r.max_norm, worst.u_mid, worst.dt, oracle_norm, r.violations.size(), r.cells.size(),
             t));
}

void totality_at_zero_speed() {
  Stopwatch sw;
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> uni(-1.0, 1.0), step(1e-6, 1.0);
  std::size_t bad = 0, zero_speed = 0;
  for (int i = 0; i < 1000000; ++i) {
    const double u = (i % 8 == 0) ? 0.0 : 40.0 * std::abs(uni(rng));
    zero_speed += u == 0.0;
    const sb::State6 s{uni(rng) * 1e3, uni(rng) * 1e3, uni(rng) * 20, u, uni(rng) * 10,
                       uni(rng) * 5};
    const sb::ControlInput in{uni(rng) * 5, uni(rng) * std::numbers::pi / 4};
    if (!finite(sb::step_proposed(kCar, s, in, sb::StepSize{step(rng)}))) ++bad;
  }
  const auto hand = sb::step_proposed(kCar, {0, 0, 0, 0, 0, 0.1}, {0, 0}, sb::StepSize{0.1});
  const double t = sw.seconds();
  const bool pass = bad == 0 && std::abs(hand.v - 0.010400) <= 1e-6 && t < 10.0;
  report(2, pass, "totality at zero speed",
         fmt("non-finite=%zu of 1000000 (U=0 exactly: %zu) V'(U=0,w=0.1)=%.9f runtime=%.3fs "
             "(need 0 non-finite, V'=0.010400+-1e-6, <10s)",
             bad, zero_speed, hand.v, t));
}

void step_steer_contrast() {
  auto scenario = [](sb::Integrator i, double dt, double accel) {
    sb::Scenario sc;
    sc.initial = {0, 0, 0, 8, 0, 0};
    sc.schedule =
        sb::InputSchedule({{0.0, {accel, 0.1347}, 0.0}, {1.0, {accel, 0.2674}, 0.0}});
    sc.dt = dt;
    sc.duration = 5.0;
    sc.integrator = i;
    return sc;
  };
  std::string detail;
  bool pass = true;
  for (double dt : {0.01, 0.05, 0.1}) {
    for (double accel : {0.0, -0.99}) {
      const auto tr = sb::run_scenario(scenario(sb::Integrator::proposed, dt, accel));
      pass = pass && !tr.diverged;
      detail += fmt("proposed T_s=%g a=%g diverged=%d; ", dt, accel, tr.diverged ? 1 : 0);
    }
  }
  const auto fe = sb::run_scenario(scenario(sb::Integrator::forward_euler, 0.1, -0.99));
  pass = pass && fe.diverged;
  detail += fmt("forward_euler T_s=0.1 braking diverged=%d at t=%g "
                "(need proposed bounded, forward Euler flagged)",
                fe.diverged ? 1 : 0, fe.divergence_time.value_or(NAN));
  report(3, pass, "step-steer stability contrast", detail);
}

void accuracy_ordering() {
  Stopwatch sw;
  sb::AccuracyConfig cfg;
  cfg.jobs = jobs();
  const auto reps = sb::accuracy_table(kCar, {5, 10, 15, 20, 25}, {0.05, 0.10, 0.15, 0.20, 0.25},
                                       cfg);
  const double t = sw.seconds();
  std::size_t ok = 0;
  double worst = INFINITY;
  for (const auto& r : reps) {
    if (!r.error && r.dynamic_rms < r.kinematic_rms && r.improvement_pct > 0.0) ++ok;
    worst = std::min(worst, r.error ? -INFINITY : r.improvement_pct);
  }
  const bool pass = reps.size() == 25 && ok == 25 && t < 60.0;
  report(4, pass, "accuracy ordering",
         fmt("cells with dynamic<kinematic=%zu of %zu min improvement=%.2f%% runtime=%.3fs "
             "(need 25 of 25, <60s)",
             ok, reps.size(), worst, t));
}

void oracle_proximity() {
  // Test-side RK4 at 1e-4 s sampled every 1e-3 s against the library step.
  constexpr double kOut = 1e-3;
  constexpr int kFine = 10;
  constexpr int kSamples = 5000;
  oracle::Vec6 ref{0, 0, 0, 5, 0, 0};
  sb::State6 s{0, 0, 0, 5, 0, 0};
  double sum = 0.0;
  for (int k = 0; k <= kSamples; ++k) {
    sum += (s.x - ref[0]) * (s.x - ref[0]) + (s.y - ref[1]) * (s.y - ref[1]);
    if (k == kSamples) break;
    for (int j = 0; j < kFine; ++j) ref = oracle::rk4(oracle::kSimulationCar, ref, 0.0, 0.05, kOut / kFine);
    s = sb::step_proposed(kCar, s, {0.0, 0.05}, sb::StepSize{kOut});
  }
  const double rms = std::sqrt(sum / (kSamples + 1));
  report(5, rms < 0.05, "oracle proximity",
         fmt("position RMS=%.6f m over 5 s at U0=5 delta=0.05 (need <0.05 m)", rms));
}

void timing() {
  Stopwatch sw;
  const auto b = sb::timing_benchmark(kCar, 10000);
  const double t = sw.seconds();
  const double ratio = b.proposed.mean_us / b.kinematic.mean_us;
  const bool pass = ratio <= 3.0 && b.proposed.mean_us <= 100.0 && t < 5.0;
  report(6, pass, "timing",
         fmt("proposed mean=%.4f us kinematic mean=%.4f us ratio=%.3f runtime=%.3fs "
             "(need ratio<=3, proposed<=100us, <5s)",
             b.proposed.mean_us, b.kinematic.mean_us, ratio, t));
}

void noise_robustness() {
  sb::Scenario base;
  base.initial = {0, 0, 0, 5, 0, 0};
  base.schedule = sb::InputSchedule::constant({0, 0.2674});
  base.dt = 0.01;
  base.duration = 10.0;
  int monotone = 0;
  bool all_finite = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    double prev = -1.0;
    bool ok = true;
    for (double sigma : {0.01, 0.05, 0.10}) {
      const auto run = sb::run_noise_robustness(base, {sigma, seed});
      const double d = run.deviation.back();
      const bool fin = std::isfinite(d) && !run.trajectory.diverged &&
                       run.deviation.size() == run.clean.size();
      all_finite = all_finite && fin;
      ok = ok && fin && d >= prev;
      prev = d;
    }
    monotone += ok;
  }
  report(7, all_finite && monotone >= 9, "noise robustness",
         fmt("seeds with non-decreasing final deviation=%d of 10, all finite=%d (need >=9)",
             monotone, all_finite ? 1 : 0));
}

void closed_loop_stop_start() {
  Stopwatch sw;
  const auto spec = sb::OcpSpec::stop_start();
  const sb::ObstacleState obs{{15, 15}, sb::Point2{18, 12}, std::nullopt, 0.05};
  const auto r = sb::run_closed_loop(kCar, spec, {{30, 30}, 6.0}, obs,
                                     {0, 0, std::numbers::pi / 4, 6, 0, 0}, 20.0);
  const double t = sw.seconds();
  const bool stopped = r.stop_time && r.relocation_time && *r.stop_time <= *r.relocation_time;
  double min_dist = INFINITY;
  for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
    const auto& s = r.trajectory.samples[k].state;
    min_dist = std::min(min_dist, std::hypot(s.x - r.obstacle_at[k].x, s.y - r.obstacle_at[k].y));
  }
  double max_u_after = 0.0, closest = INFINITY;
  for (const auto& s : r.trajectory.samples) {
    if (!r.relocation_time || s.t <= *r.relocation_time) continue;
    max_u_after = std::max(max_u_after, s.state.u);
    closest = std::min(closest, std::hypot(s.state.x - 30.0, s.state.y - 30.0));
  }
  const bool pass = stopped && min_dist >= spec.safe_distance - 1e-6 && max_u_after > 1.0 &&
                    closest < 2.0 && t < 120.0;
  report(8, pass, "closed-loop stop-start",
         fmt("stop t=%g relocation t=%g min C.G. distance=%.4f m max U after=%.3f m/s "
             "closest to target=%.4f m runtime=%.3fs (need stop before move, distance>=%g, "
             "re-acceleration, closest<2 m, <120s)",
             r.stop_time.value_or(NAN), r.relocation_time.value_or(NAN), min_dist, max_u_after,
             closest, t, spec.safe_distance - 1e-6));
}

void error_propagation() {
  const auto e = sb::error_propagation_demo(kCar, {0, 0, 0, 10, 0, 0}, {0, 0.1, 0},
                                            sb::InputSchedule{}, sb::StepSize{0.01}, 1000);
  const double worst = *std::max_element(e.begin(), e.end());
  report(9, e.size() == 1001 && worst <= 1.0, "error-propagation boundedness",
         fmt("max |eps_k|=%.6f over %zu steps, |eps_0|=%.3f (need <=1.0)", worst, e.size() - 1,
             e.front()));
}

void backward_euler_residual() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> speed(5.0, 15.0), uni(-1.0, 1.0);
  int converged = 0, bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const sb::State6 s{uni(rng) * 50, uni(rng) * 50, uni(rng) * 3, speed(rng), 0.5 * uni(rng),
                       0.3 * uni(rng)};
    const sb::ControlInput in{2 * uni(rng), 0.1 * uni(rng)};
    const double dt = 0.01;
    sb::State6 next;
    try {
      next = sb::step_backward_euler(kCar, s, in, sb::StepSize{dt});
    } catch (const std::exception&) {
      continue;
    }
    ++converged;
    const oracle::Vec6 x{s.x, s.y, s.yaw, s.u, s.v, s.yaw_rate};
    const oracle::Vec6 xn{next.x, next.y, next.yaw, next.u, next.v, next.yaw_rate};
    const auto f = oracle::rhs(oracle::kSimulationCar, xn, in.accel, in.steer);
    double res = 0.0;
    for (int k = 0; k < 6; ++k) res = std::max(res, std::abs(xn[k] - x[k] - dt * f[k]));
    worst = std::max(worst, res);
    bad += !(res < 1e-10);
  }
  report(10, bad == 0 && converged > 0, "backward-Euler residual",
         fmt("converged=%d of 1000 worst residual=%.3e failing=%d (need all <1e-10)", converged,
             worst, bad));
}

}  // namespace

int main() {
  condition1_sweep();
  totality_at_zero_speed();
  step_steer_contrast();
  accuracy_ordering();
  oracle_proximity();
  timing();
  noise_robustness();
  closed_loop_stop_start();
  error_propagation();
  backward_euler_residual();
  std::printf("%d of 10 criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
