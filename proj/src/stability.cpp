#include "stable_bicycle/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace stable_bicycle {

namespace {

double lateral_denominator(const VehicleParams& p, double u, double dt) {
  return p.mass * u - dt * (p.k_front + p.k_rear);
}

double yaw_denominator(const VehicleParams& p, double u, double dt) {
  return p.yaw_inertia * u -
         dt * (p.l_front * p.l_front * p.k_front + p.l_rear * p.l_rear * p.k_rear);
}

double yaw_coupling(const VehicleParams& p) {
  return p.l_front * p.k_front - p.l_rear * p.k_rear;
}

bool finite(const State6& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.yaw) &&
         std::isfinite(s.u) && std::isfinite(s.v) && std::isfinite(s.yaw_rate);
}

}  // namespace

Mat2 a_hat(const VehicleParams& p, double u_row1, double u_row2, double dt) {
  const double c = yaw_coupling(p);
  const double d1 = lateral_denominator(p, u_row1, dt);
  const double d2 = yaw_denominator(p, u_row2, dt);
  return {p.mass * u_row1 / d1, (dt * c - dt * p.mass * u_row1 * u_row1) / d1,
          dt * c / d2, p.yaw_inertia * u_row2 / d2};
}

Vec2 b_vector(const VehicleParams& p, const State3& mid, double steer, double dt) {
  const double m = p.mass;
  const double iz = p.yaw_inertia;
  const double c = yaw_coupling(p);
  const double u = mid.u;
  const double v = mid.v;
  const double w = mid.yaw_rate;

  // Quotient rule on V' = N1/D1 and omega' = N2/D2 with respect to U.
  const double d1 = lateral_denominator(p, u, dt);
  const double n1 = m * u * v - dt * p.k_front * steer * u + dt * c * w - dt * m * u * u * w;
  const double b1 = ((m * v - (dt * p.k_front * steer + 2.0 * dt * m * u * w)) * d1 - m * n1) /
                    (d1 * d1);

  const double d2 = yaw_denominator(p, u, dt);
  const double n2 = iz * u * w + dt * c * v - dt * p.l_front * p.k_front * steer * u;
  const double b2 = (d2 * (iz * w - dt * p.l_front * p.k_front * steer) - iz * n2) / (d2 * d2);
  return {b1, b2};
}

JacobianBlocks jacobian_blocks(const VehicleParams& p, const State3& mid, double steer,
                               double dt) {
  return {a_hat(p, mid.u, dt), b_vector(p, mid, steer, dt)};
}

double spectral_norm_2x2(const Mat2& m) {
  // M^T M = [[p, q], [q, r]]; largest eigenvalue is (p+r)/2 + sqrt(((p-r)/2)^2 + q^2).
  const double p = m.m00 * m.m00 + m.m10 * m.m10;
  const double r = m.m01 * m.m01 + m.m11 * m.m11;
  const double q = m.m00 * m.m01 + m.m10 * m.m11;
  const double half_diff = 0.5 * (p - r);
  const double lambda = 0.5 * (p + r) + std::hypot(half_diff, q);
  return std::sqrt(std::max(lambda, 0.0));
}

double spectral_radius_2x2(const Mat2& m) {
  const double half_trace = 0.5 * (m.m00 + m.m11);
  const double det = m.m00 * m.m11 - m.m01 * m.m10;
  const double disc = half_trace * half_trace - det;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    return std::max(std::abs(half_trace + root), std::abs(half_trace - root));
  }
  // complex pair: |lambda|^2 = det
  return std::sqrt(det);
}

StabilitySweepResult sweep_condition1(const VehicleParams& p, double u_min, double u_max,
                                      std::size_t n_grid, const std::vector<double>& dts,
                                      const SweepOptions& opts) {
  if (!(u_min >= 0.0) || !(u_max > u_min)) {
    throw std::invalid_argument("sweep needs 0 <= U_min < U_max");
  }
  if (n_grid < 2) throw std::invalid_argument("sweep needs n_grid >= 2");
  if (dts.empty()) throw std::invalid_argument("sweep needs at least one T_s");
  for (double dt : dts) (void)StepSize{dt};

  StabilitySweepResult res;
  res.u_min = u_min;
  res.u_max = u_max;
  res.n_grid = n_grid;
  res.dts = dts;
  res.tolerance = opts.tolerance;
  res.cells.resize(n_grid * dts.size());

  const double spacing = (u_max - u_min) / static_cast<double>(n_grid - 1);
  auto fill = [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const double dt = dts[idx / n_grid];
      const std::size_t i = idx % n_grid;
      const double u = i + 1 == n_grid ? u_max : u_min + spacing * static_cast<double>(i);
      const Mat2 a = a_hat(p, u, dt);
      res.cells[idx] = {u, dt, spectral_norm_2x2(a), spectral_radius_2x2(a)};
    }
  };

  const std::size_t total = res.cells.size();
  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(total)));
  if (jobs == 1) {
    fill(0, total);
  } else {
    std::vector<std::jthread> workers;
    const std::size_t chunk = (total + jobs - 1) / jobs;
    for (unsigned j = 0; j < jobs; ++j) {
      const std::size_t begin = j * chunk;
      const std::size_t end = std::min(total, begin + chunk);
      if (begin < end) workers.emplace_back(fill, begin, end);
    }
  }

  for (std::size_t idx = 0; idx < total; ++idx) {
    const double norm = res.cells[idx].norm;
    res.max_norm = std::max(res.max_norm, norm);
    if (!(norm <= 1.0 + opts.tolerance)) res.violations.push_back(idx);
  }
  return res;
}

PairwiseSweepResult sweep_condition1_pairwise(const VehicleParams& p, double u_min,
                                              double u_max, std::size_t n_grid,
                                              const std::vector<double>& dts) {
  if (!(u_min >= 0.0) || !(u_max > u_min) || n_grid < 2 || dts.empty()) {
    throw std::invalid_argument("pairwise sweep needs 0 <= U_min < U_max, n_grid >= 2, T_s list");
  }
  PairwiseSweepResult res;
  const double spacing = (u_max - u_min) / static_cast<double>(n_grid - 1);
  for (double dt : dts) {
    for (std::size_t i = 0; i < n_grid; ++i) {
      const double u1 = u_min + spacing * static_cast<double>(i);
      for (std::size_t j = 0; j < n_grid; ++j) {
        const double u2 = u_min + spacing * static_cast<double>(j);
        const double norm = spectral_norm_2x2(a_hat(p, u1, u2, dt));
        if (norm > res.max_norm) res = {norm, u1, u2, dt};
      }
    }
  }
  return res;
}

std::vector<double> error_propagation_demo(const VehicleParams& p, const State6& s0,
                                           const State3& perturbation,
                                           const InputSchedule& schedule, StepSize dt,
                                           std::size_t steps, Stepper stepper) {
  if (!std::isfinite(perturbation.u) || !std::isfinite(perturbation.v) ||
      !std::isfinite(perturbation.yaw_rate)) {
    throw std::invalid_argument("perturbation must be finite");
  }
  auto advance = [&](const State6& s, const ControlInput& in) {
    switch (stepper) {
      case Stepper::forward_euler:
        return step_forward_euler(p, s, in, dt);
      case Stepper::backward_euler:
        return step_backward_euler(p, s, in, dt);
      case Stepper::proposed:
        break;
    }
    return step_proposed(p, s, in, dt);
  };
  auto gap = [](const State6& a, const State6& b) {
    return std::sqrt((a.u - b.u) * (a.u - b.u) + (a.v - b.v) * (a.v - b.v) +
                     (a.yaw_rate - b.yaw_rate) * (a.yaw_rate - b.yaw_rate));
  };

  State6 a = s0;
  State6 b = s0;
  b.u += perturbation.u;
  b.v += perturbation.v;
  b.yaw_rate += perturbation.yaw_rate;

  std::vector<double> series;
  series.reserve(steps + 1);
  series.push_back(gap(a, b));
  for (std::size_t k = 0; k < steps; ++k) {
    const ControlInput in = schedule.at(static_cast<double>(k) * dt.value());
    try {
      a = advance(a, in);
      b = advance(b, in);
    } catch (const std::exception&) {
      series.resize(steps + 1, std::numeric_limits<double>::infinity());
      return series;
    }
    if (!finite(a) || !finite(b)) {
      series.resize(steps + 1, std::numeric_limits<double>::infinity());
      return series;
    }
    series.push_back(gap(a, b));
  }
  return series;
}

}  // namespace stable_bicycle
