#pragma once

#include <string>
#include <utility>
#include <vector>

#include "chainctl/dynamics.hpp"
#include "chainctl/experiments.hpp"

namespace chainctl {

/// Time-agent matrix with a diverging blue/white/red shade per cell.
void emit_heatline_svg(const std::string& path, const Trajectory& traj);

/// One polyline per agent over time.
void emit_agent_lines_svg(const std::string& path, const Trajectory& traj);

/// Cost against N on a log scale with the fitted model overlaid, plus a
/// log(cost)-vs-N^2 inset where exp-in-N^2 growth shows as a straight line.
void emit_cost_vs_n_svg(const std::string& path,
                        const std::vector<std::pair<int, double>>& points,
                        const CostFit& fit);

}  // namespace chainctl
