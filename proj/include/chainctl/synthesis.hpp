#pragma once

#include <cstddef>

#include "chainctl/dynamics.hpp"

namespace chainctl {

/// One controlled integration setup: everything but the control itself.
struct ControlProblem {
  ChainOperatord op;
  NonlinearitySpec spec;
  ControlLayout layout;
  VectorXd y0;
  TimeFrame frame;
  int n_steps = 0;
  std::size_t checkpoint_budget_bytes = std::size_t(256) << 20;
};

/// J(v) = sum_i w_i |y_i(horizon) - target_i|^2 + beta int sum_c |v_c|^2 dt,
/// terminal part unweighted by default, quadrature identical to the
/// integrator's piecewise-constant rule.
struct ObjectiveSpec {
  double beta = 1e-15;
  VectorXd target;           // empty = origin
  VectorXd terminal_weight;  // empty = uniform 1
};

double evaluate_objective(const ControlProblem& problem,
                          const ControlSignal& control,
                          const ObjectiveSpec& obj);

/// Exact gradient of the discrete objective via the adjoint of the IMEX
/// midpoint scheme, returned on the control grid. Forward states are
/// checkpointed to fit the problem's memory budget and recomputed per
/// window on the backward sweep.
ControlSignal gradient(const ControlProblem& problem,
                       const ControlSignal& control, const ObjectiveSpec& obj);

struct MinimizeOptions {
  int max_iters = 500;
  double grad_tol = 1e-8;  // on the gradient of J/J(init)
  int memory = 10;
  int max_backtracks = 40;
};

struct SynthesisResult {
  ControlSignal control;
  Trajectory trajectory;
  double objective_value = 0.0;  // J at the returned control
  double terminal_norm = 0.0;    // weighted |y(horizon)|_2
  double control_cost = 0.0;     // L^2 norm of the control in its frame
  int iterations = 0;
  double gradient_norm = 0.0;  // of the normalized objective at the end
  bool converged = false;
};

/// Limited-memory quasi-Newton descent with Armijo backtracking on the
/// normalized objective J/J(init). Monotone over accepted iterates; stops on
/// gradient_norm <= grad_tol or max_iters; a failed line search returns the
/// best iterate with converged = false.
SynthesisResult minimize(const ControlProblem& problem, const ObjectiveSpec& obj,
                         const ControlSignal& init_control,
                         const MinimizeOptions& options);

struct ExtensionSynthesis {
  ControlSignal boundary_control;  // two channels, rescaled frame
  Trajectory inner_trajectory;     // extended run restricted to agents 1..n
  Trajectory reintegrated;         // n-agent Neumann run driven by the
                                   // extracted boundary controls
  SynthesisResult extended_result;
  double restriction_mismatch = 0.0;  // sup over steps of the weighted norm
                                      // of (inner - reintegrated)
  double flux_norm = 0.0;             // boundary_flux_norm of the extended run
};

struct ExtensionOptions {
  MinimizeOptions minimize;
  int n_steps = 0;  // 0 = default_n_steps(n)
};

/// Boundary-control construction through the extended chain: solve an
/// interior-control problem on the 2w+n+1 chain (Dirichlet flavor, controls
/// outside the embedded network), restrict to agents 1..n, and read the two
/// boundary controls off the junction fluxes,
///   u_1 = (n^2/3)(y_0 - y_1),  u_2 = (n^2/3)(y_{n+1} - y_n).
/// Per step the flux is averaged over the step endpoints, which is the
/// discretization of these formulas consistent with the midpoint scheme:
/// re-integrating the n-agent Neumann system with the extracted controls
/// then reproduces the restricted trajectory to solver roundoff.
ExtensionSynthesis synthesize_boundary_via_extension(
    int n, const NonlinearitySpec& spec, const VectorXd& y0, double T,
    const ObjectiveSpec& obj, const ExtensionOptions& options = {});

/// n * (||y_0 - y_1||_{L2 tau} + ||y_{n+1} - y_n||_{L2 tau}) on a dense
/// extended trajectory: the junction-flux quantity whose boundedness in n
/// makes the extracted boundary controls uniformly bounded.
double boundary_flux_norm(const Trajectory& extended, int n);

}  // namespace chainctl
