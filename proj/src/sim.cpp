#include "stable_bicycle/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace stable_bicycle {

namespace {

bool diverged_state(const State6& s) {
  for (double c : {s.x, s.y, s.yaw, s.u, s.v, s.yaw_rate}) {
    if (!std::isfinite(c) || std::abs(c) > kDivergenceThreshold) return true;
  }
  return false;
}

KinematicState to_kinematic(const State6& s) { return {s.x, s.y, s.yaw, s.u}; }

}  // namespace

std::string_view to_string(Integrator i) {
  switch (i) {
    case Integrator::forward_euler:
      return "forward_euler";
    case Integrator::backward_euler:
      return "backward_euler";
    case Integrator::proposed:
      return "proposed";
    case Integrator::kinematic:
      return "kinematic";
  }
  return "unknown";
}

Integrator parse_integrator(std::string_view name) {
  for (Integrator i : {Integrator::forward_euler, Integrator::backward_euler,
                       Integrator::proposed, Integrator::kinematic}) {
    if (to_string(i) == name) return i;
  }
  throw std::invalid_argument("unknown integrator '" + std::string(name) +
                              "' (expected forward_euler|backward_euler|proposed|kinematic)");
}

void validate_scenario(const Scenario& sc) {
  validate_params(sc.params);
  if (!(sc.dt > 0.0) || !(sc.dt <= 1.0)) throw std::invalid_argument("T_s must be in (0, 1]");
  if (!(sc.duration > 0.0) || !std::isfinite(sc.duration)) {
    throw std::invalid_argument("duration must be positive");
  }
  if (diverged_state(sc.initial)) throw std::invalid_argument("initial state must be finite");
  if (!(sc.initial.u >= 0.0)) throw std::invalid_argument("initial U must be >= 0");
}

Trajectory run_scenario_with_steer_offsets(const Scenario& sc,
                                           const std::vector<double>& offsets) {
  validate_scenario(sc);
  const StepSize dt{sc.dt};
  const std::size_t n = sample_count(sc.duration, sc.dt);

  Trajectory traj;
  traj.integrator = std::string(to_string(sc.integrator));
  traj.dt = sc.dt;
  traj.samples.reserve(n);

  State6 x = sc.initial;
  KinematicState xk = to_kinematic(sc.initial);
  if (sc.integrator == Integrator::kinematic) x = lift_kinematic(sc.params, xk, 0.0);

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * sc.dt;
    ControlInput in = sc.schedule.at(t);
    if (k < offsets.size()) in.steer += offsets[k];
    if (sc.integrator == Integrator::kinematic) x = lift_kinematic(sc.params, xk, in.steer);

    if (diverged_state(x)) {
      traj.diverged = true;
      traj.divergence_time = t;
      break;
    }
    traj.samples.push_back({t, x, in});
    if (k + 1 == n) break;

    try {
      switch (sc.integrator) {
        case Integrator::forward_euler:
          x = step_forward_euler(sc.params, x, in, dt);
          break;
        case Integrator::backward_euler:
          x = step_backward_euler(sc.params, x, in, dt, sc.fixed_point);
          break;
        case Integrator::proposed:
          x = step_proposed(sc.params, x, in, dt);
          break;
        case Integrator::kinematic:
          xk = step_kinematic(sc.params, xk, in, dt);
          break;
      }
    } catch (const SingularityError&) {
      traj.diverged = true;
      traj.divergence_time = t + sc.dt;
      break;
    } catch (const ConvergenceError&) {
      traj.diverged = true;
      traj.divergence_time = t + sc.dt;
      break;
    }
  }
  return traj;
}

Trajectory run_scenario(const Scenario& sc) { return run_scenario_with_steer_offsets(sc, {}); }

NoiseRun run_noise_robustness(const Scenario& base, const NoiseSpec& noise) {
  if (!(noise.sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  const std::size_t n = sample_count(base.duration, base.dt);

  std::vector<double> offsets(n, 0.0);
  if (noise.sigma > 0.0) {
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, noise.sigma);
    for (double& o : offsets) o = gauss(rng);
  }

  NoiseRun run;
  run.clean = run_scenario(base);
  run.trajectory = run_scenario_with_steer_offsets(base, offsets);
  const std::size_t common = std::min(run.clean.size(), run.trajectory.size());
  run.deviation.reserve(common);
  for (std::size_t k = 0; k < common; ++k) {
    const State6& a = run.clean.samples[k].state;
    const State6& b = run.trajectory.samples[k].state;
    run.deviation.push_back(std::hypot(a.x - b.x, a.y - b.y));
  }
  return run;
}

double rms_position_error(const Trajectory& a, const Trajectory& b) {
  if (std::abs(a.dt - b.dt) > 1e-12 * std::max(a.dt, b.dt)) {
    throw std::invalid_argument("trajectories have different sample rates");
  }
  const std::size_t n = std::min(a.size(), b.size());
  if (n == 0) throw std::invalid_argument("trajectories do not overlap");
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const State6& p = a.samples[k].state;
    const State6& q = b.samples[k].state;
    sum += (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y);
  }
  return std::sqrt(sum / static_cast<double>(n));
}

std::vector<RmsReport> accuracy_table(const VehicleParams& p, const std::vector<double>& u0s,
                                      const std::vector<double>& steers,
                                      const AccuracyConfig& cfg) {
  validate_params(p);
  for (double u0 : u0s) {
    if (!(u0 > 0.0)) throw std::invalid_argument("accuracy table needs U0 > 0");
  }

  std::vector<RmsReport> reports(u0s.size() * steers.size());
  auto run_cell = [&](std::size_t idx) {
    RmsReport& r = reports[idx];
    r.u0 = u0s[idx / steers.size()];
    r.steer = steers[idx % steers.size()];

    std::vector<InputSegment> segs{{0.0, {0.0, 0.0}, 0.0}};
    if (cfg.steer_ramp > 0.0) {
      segs.push_back({cfg.dt, {0.0, r.steer}, cfg.steer_ramp});
    } else {
      segs.front().input.steer = r.steer;
    }
    const InputSchedule schedule(std::move(segs));

    Scenario sc;
    sc.params = p;
    sc.initial = {0.0, 0.0, 0.0, r.u0, 0.0, 0.0};
    sc.schedule = schedule;
    sc.dt = cfg.dt;
    sc.duration = cfg.duration;

    try {
      const Trajectory reference = reference_rk4(
          p, sc.initial, schedule,
          {.fine_step = cfg.fine_step, .output_step = cfg.dt, .duration = cfg.duration});
      sc.integrator = Integrator::proposed;
      r.dynamic_rms = rms_position_error(run_scenario(sc), reference);
      sc.integrator = Integrator::kinematic;
      r.kinematic_rms = rms_position_error(run_scenario(sc), reference);
      r.improvement_pct =
          r.kinematic_rms > 0.0 ? 100.0 * (r.kinematic_rms - r.dynamic_rms) / r.kinematic_rms
                                : 0.0;
    } catch (const SingularityError& e) {
      r.error = e.what();
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, reports.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < reports.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (unsigned j = 0; j < jobs; ++j) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < reports.size(); i = next++) run_cell(i);
      });
    }
  }
  return reports;
}

namespace {

template <typename T>
void keep(const T& value) {
  asm volatile("" : : "g"(&value) : "memory");
}

LatencyStats summarize(std::vector<double> per_step_us, double total_ms) {
  LatencyStats s;
  s.total_ms = total_ms;
  if (per_step_us.empty()) return s;
  double sum = 0.0;
  for (double v : per_step_us) sum += v;
  s.mean_us = sum / static_cast<double>(per_step_us.size());
  std::sort(per_step_us.begin(), per_step_us.end());
  s.median_us = per_step_us[per_step_us.size() / 2];
  s.p95_us = per_step_us[std::min(per_step_us.size() - 1,
                                  static_cast<std::size_t>(0.95 * per_step_us.size()))];
  return s;
}

// Steps are timed in blocks so clock overhead does not dominate the
// sub-microsecond step cost; each block contributes one per-step sample.
constexpr std::size_t kBlock = 10;

}  // namespace

BenchmarkResult timing_benchmark(const VehicleParams& p, std::size_t n_steps) {
  if (n_steps < 1000) throw std::invalid_argument("benchmark needs n_steps >= 1000");
  using clock = std::chrono::steady_clock;
  const StepSize dt{0.01};
  const ControlInput in{0.0, 0.2674};

  BenchmarkResult res;
  res.n_steps = n_steps;

  auto time_loop = [&](auto&& step, auto state) {
    std::vector<double> samples;
    samples.reserve(n_steps / kBlock + 1);
    const auto start = clock::now();
    for (std::size_t done = 0; done < n_steps;) {
      const std::size_t block = std::min(kBlock, n_steps - done);
      const auto t0 = clock::now();
      for (std::size_t i = 0; i < block; ++i) {
        state = step(state);
        keep(state);
      }
      const auto t1 = clock::now();
      samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count() /
                        static_cast<double>(block));
      done += block;
    }
    const double total = std::chrono::duration<double, std::milli>(clock::now() - start).count();
    return summarize(std::move(samples), total);
  };

  res.proposed = time_loop([&](const State6& s) { return step_proposed(p, s, in, dt); },
                           State6{0.0, 0.0, 0.0, 5.0, 0.0, 0.0});
  res.kinematic =
      time_loop([&](const KinematicState& s) { return step_kinematic(p, s, in, dt); },
                KinematicState{0.0, 0.0, 0.0, 5.0});
  return res;
}

}  // namespace stable_bicycle
