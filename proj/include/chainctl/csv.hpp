#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "chainctl/dynamics.hpp"
#include "chainctl/experiments.hpp"

namespace chainctl {

/// Shortest decimal representation that round-trips the exact double.
std::string format_double(double value);
double parse_double(std::string_view text);

/// "step,tau,t,norm2,mean,maxabs[,y_1..y_N]": one row per stored step, both
/// time columns always emitted (t = n^2 tau); state columns when n <= 64.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

/// "step,tau,u_1..u_m": knot values in the signal's current frame; the tau
/// column is always rescaled time.
void write_control_csv(std::ostream& out, const ControlSignal& signal);
void write_control_csv(const std::string& path, const ControlSignal& signal);

/// Reads a control CSV back; values are interpreted in `frame`.
ControlSignal read_control_csv(const std::string& path, const TimeFrame& frame);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records);
void write_sweep_csv(const std::string& path,
                     const std::vector<SweepRecord>& records);
std::vector<SweepRecord> read_sweep_csv(const std::string& path);

}  // namespace chainctl
