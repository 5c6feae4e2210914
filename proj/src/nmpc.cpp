#include "stable_bicycle/nmpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "stable_bicycle/integrators.hpp"

namespace stable_bicycle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::array<double, 6> as_array(const State6& s) {
  return {s.x, s.y, s.yaw, s.u, s.v, s.yaw_rate};
}

double weighted_sq(const StateWeights& w, const State6& a, const State6& b) {
  const auto x = as_array(a);
  const auto y = as_array(b);
  double sum = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    if (w[i] != 0.0) sum += w[i] * (x[i] - y[i]) * (x[i] - y[i]);
  }
  return sum;
}

State6 obstacle_state(Point2 o) { return {o.x, o.y, 0.0, 0.0, 0.0, 0.0}; }

ControlInput project(const OcpSpec& spec, ControlInput in) {
  return {std::clamp(in.accel, spec.u_min.accel, spec.u_max.accel),
          std::clamp(in.steer, spec.u_min.steer, spec.u_max.steer)};
}

double bound_excess(const OcpSpec& spec, const State6& s) {
  const auto x = as_array(s);
  double worst = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    worst = std::max({worst, x[i] - spec.x_max[i], spec.x_min[i] - x[i]});
  }
  return worst;
}

// Decision vector layout: [a_0, delta_0, a_1, delta_1, ...].
struct Problem {
  const VehicleParams& params;
  const OcpSpec& spec;
  const State6& x0;
  const std::vector<State6>& refs;
  std::optional<Point2> obstacle;

  std::vector<ControlInput> unpack(const std::vector<double>& z) const {
    std::vector<ControlInput> u(z.size() / 2);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = {z[2 * k], z[2 * k + 1]};
    return u;
  }

  double lower(std::size_t i) const { return i % 2 == 0 ? spec.u_min.accel : spec.u_min.steer; }
  double upper(std::size_t i) const { return i % 2 == 0 ? spec.u_max.accel : spec.u_max.steer; }

  // Tracking + input cost.
  double base_cost(const std::vector<State6>& xs, const std::vector<double>& z) const {
    double cost = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      cost += weighted_sq(spec.q, xs[k], refs[k]);
      cost += spec.r[0] * z[2 * k] * z[2 * k] + spec.r[1] * z[2 * k + 1] * z[2 * k + 1];
    }
    return cost;
  }

  double penalty_terms(const std::vector<State6>& xs) const {
    const double reach = spec.safe_distance + spec.solver.safety_buffer;
    double sum = 0.0;
    for (const State6& s : xs) {
      if (obstacle) {
        const double g = reach * reach - weighted_sq(spec.q_safe, s, obstacle_state(*obstacle));
        if (g > 0.0) sum += g * g;
      }
      const auto x = as_array(s);
      for (std::size_t i = 0; i < 6; ++i) {
        const double hi = x[i] - spec.x_max[i];
        const double lo = spec.x_min[i] - x[i];
        if (hi > 0.0) sum += hi * hi;
        if (lo > 0.0) sum += lo * lo;
      }
    }
    return sum;
  }

  double violation(const std::vector<State6>& xs) const {
    double worst = 0.0;
    for (const State6& s : xs) {
      if (obstacle) {
        const double d = std::sqrt(weighted_sq(spec.q_safe, s, obstacle_state(*obstacle)));
        worst = std::max(worst, spec.safe_distance - d);
      }
      worst = std::max(worst, bound_excess(spec, s));
    }
    return worst;
  }

  double objective(const std::vector<double>& z, double mu) const {
    const auto xs = rollout(params, spec, x0, unpack(z));
    return base_cost(xs, z) + mu * penalty_terms(xs);
  }
};

}  // namespace

OcpSpec OcpSpec::stop_start() {
  OcpSpec spec;
  spec.x_min = {-kInf, -kInf, -kInf, 0.0, -4.0, -3.0};
  spec.x_max = {kInf, kInf, kInf, 20.0, 4.0, 3.0};
  spec.u_min = {-5.0, -std::numbers::pi / 4};
  spec.u_max = {2.0, std::numbers::pi / 4};
  return spec;
}

void validate_ocp(const OcpSpec& spec) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(spec.control_horizon >= 1 && spec.horizon >= spec.control_horizon,
          "OCP needs N_p >= N_c >= 1");
  for (double w : spec.q) require(w >= 0.0, "Q weights must be >= 0");
  for (double w : spec.q_safe) require(w >= 0.0, "Q_s weights must be >= 0");
  require(spec.r[0] >= 0.0 && spec.r[1] >= 0.0, "R weights must be >= 0");
  require(spec.safe_distance > 0.0, "D_s must be positive");
  for (std::size_t i = 0; i < 6; ++i) require(spec.x_min[i] <= spec.x_max[i], "x_min > x_max");
  require(spec.u_min.accel <= spec.u_max.accel && spec.u_min.steer <= spec.u_max.steer,
          "u_min > u_max");
  require(std::isfinite(spec.u_min.accel) && std::isfinite(spec.u_max.accel) &&
              std::isfinite(spec.u_min.steer) && std::isfinite(spec.u_max.steer),
          "input bounds must be finite");
  require(spec.dt > 0.0 && spec.dt <= 1.0, "OCP T_s must be in (0, 1]");
  require(spec.solver.max_iters >= 1, "solver max_iters must be >= 1");
  require(spec.solver.penalty_init > 0.0 && spec.solver.penalty_growth > 1.0,
          "penalty schedule must start positive and grow");
  require(spec.solver.safety_buffer >= 0.0, "safety_buffer must be >= 0");
}

std::vector<State6> build_reference(const ReferenceGenerator& rg, const State6& current,
                                    int horizon, double dt) {
  if (!(rg.speed >= 0.0)) throw std::invalid_argument("reference speed must be >= 0");
  const double dx = rg.target.x - current.x;
  const double dy = rg.target.y - current.y;
  const double dist = std::hypot(dx, dy);
  const double heading = dist > 0.0 ? std::atan2(dy, dx) : current.yaw;
  const double ux = dist > 0.0 ? dx / dist : 0.0;
  const double uy = dist > 0.0 ? dy / dist : 0.0;

  std::vector<State6> refs(static_cast<std::size_t>(horizon));
  for (int k = 1; k <= horizon; ++k) {
    const double along = std::min(rg.speed * dt * k, dist);
    State6& r = refs[static_cast<std::size_t>(k - 1)];
    r.x = along >= dist ? rg.target.x : current.x + along * ux;
    r.y = along >= dist ? rg.target.y : current.y + along * uy;
    r.yaw = heading;
    r.u = rg.speed;
  }
  return refs;
}

CostBreakdown evaluate_ocp_cost(const OcpSpec& spec, const std::vector<State6>& states,
                                const std::vector<ControlInput>& inputs,
                                const std::vector<State6>& refs, Point2 obstacle) {
  if (states.size() != inputs.size() || states.size() != refs.size()) {
    throw std::invalid_argument("state, input and reference sequences differ in length");
  }
  CostBreakdown out;
  out.margins.reserve(states.size());
  const State6 obs = obstacle_state(obstacle);
  for (std::size_t k = 0; k < states.size(); ++k) {
    out.cost += weighted_sq(spec.q, states[k], refs[k]) +
                spec.r[0] * inputs[k].accel * inputs[k].accel +
                spec.r[1] * inputs[k].steer * inputs[k].steer;
    out.margins.push_back(weighted_sq(spec.q_safe, states[k], obs) -
                          spec.safe_distance * spec.safe_distance);
  }
  return out;
}

std::vector<State6> rollout(const VehicleParams& p, const OcpSpec& spec, const State6& x0,
                            const std::vector<ControlInput>& inputs) {
  const StepSize dt{spec.dt};
  std::vector<State6> xs;
  xs.reserve(inputs.size());
  State6 x = x0;
  for (const ControlInput& in : inputs) {
    x = step_proposed(p, x, in, dt);
    xs.push_back(x);
  }
  return xs;
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::iteration_capped:
      return "iteration-capped";
    case SolveStatus::infeasible_relaxed:
      return "infeasible-relaxed";
  }
  return "unknown";
}

std::vector<ControlInput> shift_warm_start(const std::vector<ControlInput>& prev,
                                           std::size_t shift) {
  if (prev.empty()) return prev;
  std::vector<ControlInput> out(prev.size());
  for (std::size_t k = 0; k < prev.size(); ++k) {
    out[k] = prev[std::min(k + shift, prev.size() - 1)];
  }
  return out;
}

namespace {

SolveResult solve_impl(const VehicleParams& p, const OcpSpec& spec, const State6& x0,
                       const std::vector<State6>& refs, std::optional<Point2> obstacle,
                       const std::vector<ControlInput>& initial_guess) {
  const auto n_steps = static_cast<std::size_t>(spec.horizon);
  if (refs.size() != n_steps) throw std::invalid_argument("reference length must equal N_p");
  if (!initial_guess.empty() && initial_guess.size() != n_steps) {
    throw std::invalid_argument("initial guess length must equal N_p");
  }
  const Problem prob{p, spec, x0, refs, obstacle};
  const std::size_t n = 2 * n_steps;
  const SolverSettings& cfg = spec.solver;

  // Work in box-normalised coordinates: scale[i] is the width of input i's box.
  std::vector<double> scale(n);
  for (std::size_t i = 0; i < n; ++i) scale[i] = std::max(prob.upper(i) - prob.lower(i), 1e-12);
  auto proj = [&](std::size_t i, double v) { return std::clamp(v, prob.lower(i), prob.upper(i)); };

  std::vector<double> z(n, 0.0);
  for (std::size_t k = 0; k < n_steps; ++k) {
    if (!initial_guess.empty()) {
      z[2 * k] = initial_guess[k].accel;
      z[2 * k + 1] = initial_guess[k].steer;
    }
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = proj(i, z[i]);

  // Gradient in normalised coordinates by central differences.
  auto gradient = [&](const std::vector<double>& at, double mu) {
    std::vector<double> g(n);
    std::vector<double> probe = at;
    for (std::size_t i = 0; i < n; ++i) {
      const double h = cfg.fd_step * scale[i];
      probe[i] = at[i] + h;
      const double up = prob.objective(probe, mu);
      probe[i] = at[i] - h;
      const double down = prob.objective(probe, mu);
      probe[i] = at[i];
      g[i] = (up - down) / (2.0 * h) * scale[i];
    }
    return g;
  };
  auto step_to = [&](const std::vector<double>& from, const std::vector<double>& g,
                     double alpha) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = proj(i, from[i] - alpha * g[i] * scale[i]);
    return out;
  };

  double mu = cfg.penalty_init;
  double f = prob.objective(z, mu);
  std::vector<double> g = gradient(z, mu);
  double alpha = -1.0;
  int iters = 0;
  bool stationary = false;

  while (iters < cfg.max_iters) {
    // Projected-gradient stationarity measure (unit step, normalised units).
    double pg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pg = std::max(pg, std::abs(proj(i, z[i] - g[i] * scale[i]) - z[i]) / scale[i]);
    }
    stationary = pg <= cfg.stationarity_tol * (1.0 + std::abs(f));
    if (stationary) {
      const double viol = prob.violation(rollout(p, spec, x0, prob.unpack(z)));
      if (viol <= cfg.violation_tol || mu >= cfg.penalty_max) break;
      mu = std::min(mu * cfg.penalty_growth, cfg.penalty_max);
      f = prob.objective(z, mu);
      g = gradient(z, mu);
      alpha = -1.0;
      stationary = false;
      continue;
    }
    ++iters;

    if (!(alpha > 0.0)) {
      double gmax = 0.0;
      for (double gi : g) gmax = std::max(gmax, std::abs(gi));
      alpha = gmax > 0.0 ? 0.1 / gmax : 1.0;
    }

    // Armijo backtracking along the projection arc.
    std::vector<double> trial;
    double f_trial = f;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      trial = step_to(z, g, alpha);
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (z[i] - trial[i]) / scale[i];
      f_trial = prob.objective(trial, mu);
      if (f_trial <= f - 1e-4 * decrease) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // No descent left at this precision; treat as stationary for this penalty level.
      const double viol = prob.violation(rollout(p, spec, x0, prob.unpack(z)));
      if (viol <= cfg.violation_tol || mu >= cfg.penalty_max) {
        stationary = true;
        break;
      }
      mu = std::min(mu * cfg.penalty_growth, cfg.penalty_max);
      f = prob.objective(z, mu);
      g = gradient(z, mu);
      alpha = -1.0;
      continue;
    }

    const std::vector<double> g_new = gradient(trial, mu);
    // Barzilai-Borwein step for the next iteration (normalised coordinates).
    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = (trial[i] - z[i]) / scale[i];
      ss += s * s;
      sy += s * (g_new[i] - g[i]);
    }
    alpha = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e6) : -1.0;
    z = std::move(trial);
    f = f_trial;
    g = g_new;
  }

  SolveResult res;
  res.inputs = prob.unpack(z);
  const auto xs = rollout(p, spec, x0, res.inputs);
  res.cost = prob.base_cost(xs, z);
  res.violation = prob.violation(xs);
  res.iterations = iters;
  if (!stationary) {
    res.status = SolveStatus::iteration_capped;
  } else if (res.violation > cfg.violation_tol) {
    res.status = SolveStatus::infeasible_relaxed;
  } else {
    res.status = SolveStatus::converged;
  }
  return res;
}

ClosedLoopResult closed_loop_impl(const VehicleParams& p, const OcpSpec& spec,
                                  const ReferenceGenerator& rg,
                                  std::optional<ObstacleState> obstacle, const State6& x0,
                                  double duration) {
  validate_params(p);
  validate_ocp(spec);
  if (!(duration > 0.0)) throw std::invalid_argument("closed-loop duration must be positive");
  const StepSize dt{spec.dt};
  const std::size_t n_samples = sample_count(duration, spec.dt);
  const std::size_t n_steps = n_samples - 1 == 0 ? 1 : n_samples - 1;
  const auto n_c = static_cast<std::size_t>(spec.control_horizon);

  ClosedLoopResult out;
  out.trajectory.integrator = "proposed";
  out.trajectory.dt = spec.dt;
  out.min_obstacle_distance = kInf;

  State6 x = x0;
  std::vector<ControlInput> plan;  // current optimal sequence
  std::size_t plan_pos = n_c;      // inputs of `plan` already applied
  SolveLogEntry last_log;

  auto active_obstacle = [&]() -> std::optional<Point2> {
    if (!obstacle) return std::nullopt;
    return obstacle->position;
  };
  auto record = [&](double t, const ControlInput& in) {
    out.trajectory.samples.push_back({t, x, in});
    const auto obs = active_obstacle();
    out.obstacle_at.push_back(obs.value_or(Point2{kInf, kInf}));
    if (obs) {
      out.min_obstacle_distance =
          std::min(out.min_obstacle_distance, std::hypot(x.x - obs->x, x.y - obs->y));
    }
    const double stop_speed = obstacle ? obstacle->stop_speed : 0.05;
    if (!out.stop_time && x.u < stop_speed) out.stop_time = t;
  };

  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = static_cast<double>(k) * spec.dt;

    if (obstacle && obstacle->relocate_to && !out.relocation_time) {
      const bool fire = obstacle->relocate_at ? t + 1e-9 >= *obstacle->relocate_at
                                              : x.u < obstacle->stop_speed;
      if (fire) {
        obstacle->position = *obstacle->relocate_to;
        out.relocation_time = t;
        plan_pos = n_c;  // re-plan immediately against the new obstacle
      }
    }

    if (plan_pos >= n_c) {
      const auto refs = build_reference(rg, x, spec.horizon, spec.dt);
      std::vector<ControlInput> guess;
      if (spec.solver.warm_start && !plan.empty()) guess = shift_warm_start(plan, n_c);
      const SolveResult sol = solve_impl(p, spec, x, refs, active_obstacle(), guess);
      plan = sol.inputs;
      plan_pos = 0;
      last_log = {t,
                  sol.cost,
                  sol.violation,
                  sol.iterations,
                  sol.status,
                  active_obstacle().value_or(Point2{kInf, kInf})};
    }

    const ControlInput in = project(spec, plan[plan_pos++]);
    record(t, in);
    SolveLogEntry entry = last_log;
    entry.t = t;
    out.log.push_back(entry);
    x = step_proposed(p, x, in, dt);
  }
  record(static_cast<double>(n_steps) * spec.dt, ControlInput{});
  return out;
}

}  // namespace

SolveResult solve_ocp(const VehicleParams& p, const OcpSpec& spec, const State6& x0,
                      const std::vector<State6>& refs, Point2 obstacle,
                      const std::vector<ControlInput>& initial_guess) {
  validate_ocp(spec);
  return solve_impl(p, spec, x0, refs, obstacle, initial_guess);
}

ClosedLoopResult run_closed_loop(const VehicleParams& p, const OcpSpec& spec,
                                 const ReferenceGenerator& rg, ObstacleState obstacle,
                                 const State6& x0, double duration) {
  return closed_loop_impl(p, spec, rg, obstacle, x0, duration);
}

ClosedLoopResult run_closed_loop(const VehicleParams& p, const OcpSpec& spec,
                                 const ReferenceGenerator& rg, const State6& x0,
                                 double duration) {
  return closed_loop_impl(p, spec, rg, std::nullopt, x0, duration);
}

}  // namespace stable_bicycle
