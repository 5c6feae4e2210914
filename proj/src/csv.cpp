#include "stable_bicycle/csv.hpp"

#include <cmath>
#include <cstdio>

namespace stable_bicycle::csv {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

void trajectory_row(std::ostream& os, const Sample& s) {
  os << num(s.t) << ',' << num(s.state.x) << ',' << num(s.state.y) << ',' << num(s.state.yaw)
     << ',' << num(s.state.u) << ',' << num(s.state.v) << ',' << num(s.state.yaw_rate) << ','
     << num(s.input.accel) << ',' << num(s.input.steer);
}

}  // namespace

void write_trajectory(std::ostream& os, const Trajectory& traj) {
  os << "t,X,Y,phi,U,V,omega,a,delta\n";
  for (const Sample& s : traj.samples) {
    trajectory_row(os, s);
    os << '\n';
  }
}

void write_sweep(std::ostream& os, const StabilitySweepResult& res) {
  os << "U_mid,T_s,norm\n";
  for (const SweepCell& c : res.cells) {
    os << num(c.u_mid) << ',' << num(c.dt) << ',' << num(c.norm) << '\n';
  }
}

void write_rms_reports(std::ostream& os, const std::vector<RmsReport>& reports) {
  os << "U0,delta,kinematic_rms,dynamic_rms,improvement_pct\n";
  for (const RmsReport& r : reports) {
    const double nan = std::nan("");
    os << num(r.u0) << ',' << num(r.steer) << ',' << num(r.error ? nan : r.kinematic_rms) << ','
       << num(r.error ? nan : r.dynamic_rms) << ',' << num(r.error ? nan : r.improvement_pct)
       << '\n';
  }
}

void write_closed_loop(std::ostream& os, const ClosedLoopResult& res) {
  os << "t,X,Y,phi,U,V,omega,a,delta,cost,violation,iters,status,obstacle_x,obstacle_y\n";
  for (std::size_t k = 0; k < res.trajectory.size(); ++k) {
    trajectory_row(os, res.trajectory.samples[k]);
    if (k < res.log.size()) {
      const SolveLogEntry& e = res.log[k];
      os << ',' << num(e.cost) << ',' << num(e.violation) << ',' << e.iterations << ','
         << to_string(e.status);
    } else {
      os << ",,,,";
    }
    const Point2& o = res.obstacle_at[k];
    os << ',' << num(o.x) << ',' << num(o.y) << '\n';
  }
}

}  // namespace stable_bicycle::csv
