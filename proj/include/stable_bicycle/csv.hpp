#ifndef STABLE_BICYCLE_CSV_HPP
#define STABLE_BICYCLE_CSV_HPP

#include <ostream>
#include <string>
#include <vector>

#include "stable_bicycle/nmpc.hpp"
#include "stable_bicycle/sim.hpp"
#include "stable_bicycle/stability.hpp"

namespace stable_bicycle::csv {

/// 9 significant digits, "nan"/"inf"/"-inf" for non-finite values.
std::string num(double v);

// All writers emit LF line endings and a header row.

/// t,X,Y,phi,U,V,omega,a,delta
void write_trajectory(std::ostream& os, const Trajectory& traj);

/// U_mid,T_s,norm
void write_sweep(std::ostream& os, const StabilitySweepResult& res);

/// U0,delta,kinematic_rms,dynamic_rms,improvement_pct
void write_rms_reports(std::ostream& os, const std::vector<RmsReport>& reports);

/// Trajectory columns followed by cost,violation,iters,status,obstacle_x,obstacle_y.
/// The final sample has no solve and leaves those columns empty.
void write_closed_loop(std::ostream& os, const ClosedLoopResult& res);

}  // namespace stable_bicycle::csv

#endif  // STABLE_BICYCLE_CSV_HPP
