#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chainctl/synthesis.hpp"

namespace chainctl {

enum class HorizonMode { TimeGrowsAsN2, FixedT };

std::string to_string(HorizonMode m);

struct BoundConstants {
  double C0 = 1.0;
  double C1 = 1.0;
  double C_beta = 1.0;
};

/// The closed-form cost and target-ball quantities of the uniform
/// controllability estimate; the estimate's constants are free inputs.
struct BoundEvaluation {
  double g_inf = 0.0;
  double T = 0.0;
  int n = 0;
  BoundConstants constants;
  double K = 0.0;           // exp{C1 (1 + 1/T + T g + g^{2/3})}
  double C_alpha = 0.0;     // 2 g + 1
  double cost_bound = 0.0;  // (C_beta/C_alpha) ((e^{C_a T} C_a T + 1 + T) K^2
                            //  + C_a e^{C_a T})^{1/2}
  double K_N = 0.0;         // unscaled-nonlinearity analogue, grows in n
  double N_min = 0.0;       // C1 (1 + 1/T + g^{2/3})
};

BoundEvaluation evaluate_bounds(double g_inf, double T, int n,
                                const BoundConstants& constants = {});

struct SweepPlan {
  std::vector<int> n_values = {8, 16, 24, 32, 48};
  std::vector<Scaling> regimes = {Scaling::InverseNSquared, Scaling::InverseN,
                                  Scaling::Unscaled};
  HorizonMode horizon_mode = HorizonMode::TimeGrowsAsN2;
  double base_T = 1.0;
  Flavor flavor = Flavor::Dirichlet;
  LayoutKind layout_kind = LayoutKind::InteriorBlock;
  double interior_ratio = 0.25;  // M/n, held constant across the sweep
  std::string nonlinearity = "gauss";
  double nl_param = 1.0;
  std::string y0_kind = "sine";  // sine | random | ones
  double beta = 1e-15;
  MinimizeOptions optimizer;
  int n_steps = 0;  // 0 = default_n_steps(n)
  std::uint64_t seed = 1;
  int max_parallel = 0;  // 0 = hardware concurrency
};

struct SweepRecord {
  int n = 0;
  Scaling regime = Scaling::InverseNSquared;
  HorizonMode horizon_mode = HorizonMode::TimeGrowsAsN2;
  double base_T = 1.0;
  double terminal_norm = 0.0;
  double cost_physical = 0.0;
  double cost_rescaled = 0.0;  // = n * cost_physical
  int iterations = 0;
  bool converged = false;
  long runtime_ms = 0;
  std::string status = "ok";  // ok | diverged | error
};

/// One synthesis per (n, regime), run in a small work pool and merged in
/// plan order so results do not depend on completion order.
std::vector<SweepRecord> run_scaling_sweep(const SweepPlan& plan);

enum class CostModel { Bounded, ExpInN, ExpInN2 };

std::string to_string(CostModel m);

struct CostFit {
  CostModel model = CostModel::Bounded;
  double rate = 0.0;  // slope of log(cost) against the chosen regressor
  double r_squared = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of log(cost) against {1, N, N^2}; the model with the
/// smallest information criterion wins. Needs >= 4 points.
CostFit fit_cost_growth(const std::vector<std::pair<int, double>>& points);

/// Fit on the physical-frame cost column of single-regime sweep records.
CostFit fit_cost_growth(const std::vector<SweepRecord>& records);

VectorXd make_initial_state(const std::string& kind, int n,
                            std::uint64_t seed);

struct ReproduceOptions {
  int n = 45;
  double T = 2.0;
  double beta = 1e-15;
  int n_steps = 0;  // 0 = default
  MinimizeOptions optimizer = {.max_iters = 1200, .grad_tol = 1e-10};
};

struct ReproduceResult {
  ReproduceOptions options;
  VectorXd y0;
  Trajectory free_run;
  SynthesisResult controlled;
  double initial_norm = 0.0;
  double free_terminal_norm = 0.0;
  double controlled_terminal_norm = 0.0;
};

/// The full optimal-control experiment: n = 45 Neumann chain, two boundary
/// controls, G(s) = s e^{-s^2} scaled by 1/n^2, y0_j = sin(pi j / n),
/// rescaled horizon T = 2, beta = 1e-15. Free and controlled runs are both
/// returned for plotting.
ReproduceResult reproduce_experiment(const ReproduceOptions& options = {});

}  // namespace chainctl
