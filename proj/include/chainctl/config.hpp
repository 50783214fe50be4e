#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chainctl/experiments.hpp"

namespace chainctl {

/// Flat key-value run configuration ("key = value" lines, "#" comments).
/// Every run echoes its fully resolved config next to its outputs, and the
/// echo re-parses to the same config.
///
/// T is always the rescaled-frame horizon; a physical-frame run covers
/// [0, n^2 T]. In sweeps with fixed-t horizon mode, T is the fixed physical
/// horizon instead.
struct RunConfig {
  int n = 16;
  Flavor flavor = Flavor::Neumann;
  LayoutKind layout = LayoutKind::TwoBoundary;
  int block_start = 0;  // interior-block; 0 = centered
  int block_size = 0;   // interior-block; 0 = max(1, n/4)
  std::string nonlinearity = "gauss";
  double nl_param = 1.0;
  Scaling scaling = Scaling::InverseNSquared;
  double consensus_shift = 0.0;
  Frame frame = Frame::Rescaled;
  double T = 1.0;
  double beta = 1e-15;
  int n_steps = 0;  // 0 = max(4000, 20 n)
  int max_iters = 500;
  double grad_tol = 1e-8;
  int memory = 10;
  std::uint64_t seed = 1;
  std::string y0 = "sine";
  std::string outdir;
  std::vector<int> n_values = {8, 16, 24, 32, 48};
  std::vector<Scaling> regimes = {Scaling::InverseNSquared, Scaling::InverseN,
                                  Scaling::Unscaled};
  HorizonMode horizon_mode = HorizonMode::TimeGrowsAsN2;
  double interior_ratio = 0.25;

  bool operator==(const RunConfig&) const = default;
};

/// Parses a config document. Unknown keys, type mismatches and violated
/// ranges raise ConfigError with the offending line.
RunConfig parse_config(const std::string& text);

/// Same, but starting from `base` instead of the defaults (used to apply
/// command-line overrides on top of a config file).
RunConfig parse_config(const std::string& text, const RunConfig& base);

/// Canonical echo of every (resolved) key; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& config);

ChainOperatord make_operator(const RunConfig& config);
ControlLayout make_layout(const RunConfig& config);
NonlinearitySpec make_spec(const RunConfig& config);
TimeFrame make_frame(const RunConfig& config);
VectorXd make_y0(const RunConfig& config);
int resolved_n_steps(const RunConfig& config);
MinimizeOptions make_minimize_options(const RunConfig& config);
ControlProblem make_problem(const RunConfig& config);
SweepPlan make_sweep_plan(const RunConfig& config);

}  // namespace chainctl
