#include "chainctl/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "chainctl/detail/imex_stepper.hpp"

namespace chainctl {

namespace {

void check_problem(const ControlProblem& p, const ControlSignal& control) {
  if (p.y0.size() != p.op.n)
    throw std::invalid_argument("problem: y0 length does not match operator");
  if (p.layout.n_agents != p.op.n)
    throw std::invalid_argument("problem: layout does not match operator");
  if (control.n_channels != p.layout.channels())
    throw std::invalid_argument("problem: control channels mismatch layout");
  if (control.n_steps != p.n_steps)
    throw std::invalid_argument("problem: control knots must equal n_steps");
  if (control.frame.frame != p.frame.frame ||
      control.frame.n_agents != p.frame.n_agents)
    throw std::invalid_argument("problem: control frame mismatch");
}

VectorXd terminal_weights(const ObjectiveSpec& obj, int n) {
  if (obj.terminal_weight.size() == 0) return VectorXd::Ones(n);
  if (obj.terminal_weight.size() != n)
    throw std::invalid_argument("objective: terminal_weight length mismatch");
  return obj.terminal_weight;
}

VectorXd target_state(const ObjectiveSpec& obj, int n) {
  if (obj.target.size() == 0) return VectorXd::Zero(n);
  if (obj.target.size() != n)
    throw std::invalid_argument("objective: target length mismatch");
  return obj.target;
}

double penalty_term(const ControlSignal& control, double beta) {
  const double c = control.l2_norm();
  return beta * c * c;
}

/// Forward sweep returning only the terminal state.
VectorXd forward_terminal(const detail::ImexStepper& stepper,
                          const ControlProblem& p,
                          const ControlSignal& control) {
  VectorXd y = p.y0, scratch(p.op.n), u;
  for (int k = 0; k < p.n_steps; ++k) {
    u = control.knot_values(k);
    stepper.step(y, &u, scratch);
    if (!y.allFinite()) throw DivergenceError(k + 1);
  }
  return y;
}

struct ValueAndGradient {
  double value = 0.0;
  MatrixXd gradient;  // channels x (n_steps+1), frame-native knot gradient
};

/// Objective and its exact discrete gradient in one forward/backward pass.
/// Forward states are checkpointed every `stride` steps and windows are
/// recomputed on the way back.
ValueAndGradient objective_with_gradient(const ControlProblem& p,
                                         const ControlSignal& control,
                                         const ObjectiveSpec& obj) {
  check_problem(p, control);
  const int n = p.op.n;
  const int n_steps = p.n_steps;
  const detail::ImexStepper stepper(p.op, p.spec, &p.layout, p.frame, n_steps);
  const double dt = stepper.dt;

  const std::size_t full_bytes =
      static_cast<std::size_t>(n_steps + 1) * n * sizeof(double);
  const std::size_t budget =
      std::max<std::size_t>(p.checkpoint_budget_bytes, 4096);
  const int stride =
      full_bytes <= budget
          ? 1
          : static_cast<int>((full_bytes + budget - 1) / budget);

  // Forward: checkpoints at 0, stride, 2*stride, ...; terminal kept aside.
  const int n_checkpoints = (n_steps - 1) / stride + 1;
  MatrixXd checkpoints(n, n_checkpoints);
  VectorXd y = p.y0, scratch(n), u;
  for (int k = 0; k < n_steps; ++k) {
    if (k % stride == 0) checkpoints.col(k / stride) = y;
    u = control.knot_values(k);
    stepper.step(y, &u, scratch);
    if (!y.allFinite()) throw DivergenceError(k + 1);
  }
  const VectorXd y_terminal = y;

  const VectorXd w = terminal_weights(obj, n);
  const VectorXd target = target_state(obj, n);
  const VectorXd residual = y_terminal - target;

  ValueAndGradient out;
  out.value = (w.array() * residual.array().square()).sum() +
              penalty_term(control, obj.beta);
  out.gradient = MatrixXd::Zero(control.n_channels, n_steps + 1);

  // Backward sweep of the adjoint. With L_imp = I - dt/2 D symmetric,
  //   q        = L_imp^{-1} lambda_{k+1}
  //   dJ/du_k  = dt (2 beta u_k + B^T q)
  //   lambda_k = L_exp q + nl_gain G'(y_k) . q
  VectorXd lambda = 2.0 * (w.array() * residual.array()).matrix();
  MatrixXd window(n, stride);
  VectorXd q(n), explicit_q(n);
  const int n_windows = n_checkpoints;
  for (int win = n_windows - 1; win >= 0; --win) {
    const int start = win * stride;
    const int end = std::min(start + stride, n_steps);
    window.col(0) = checkpoints.col(win);
    for (int k = start + 1; k < end; ++k) {
      VectorXd state = window.col(k - 1 - start);
      u = control.knot_values(k - 1);
      stepper.step(state, &u, scratch);
      window.col(k - start) = state;
    }
    for (int k = end - 1; k >= start; --k) {
      const auto y_k = window.col(k - start);
      q = lambda;
      stepper.lu.solve_in_place(q);
      u = control.knot_values(k);
      out.gradient.col(k) =
          dt * (2.0 * obj.beta * u + p.layout.gather(q));
      stepper.explicit_part(q, explicit_q);
      for (int i = 0; i < n; ++i)
        explicit_q[i] += stepper.nl_gain * p.spec.deriv(y_k[i]) * q[i];
      lambda.swap(explicit_q);
    }
  }
  return out;
}

}  // namespace

double evaluate_objective(const ControlProblem& problem,
                          const ControlSignal& control,
                          const ObjectiveSpec& obj) {
  check_problem(problem, control);
  const detail::ImexStepper stepper(problem.op, problem.spec, &problem.layout,
                                    problem.frame, problem.n_steps);
  const VectorXd y_terminal = forward_terminal(stepper, problem, control);
  const VectorXd w = terminal_weights(obj, problem.op.n);
  const VectorXd residual = y_terminal - target_state(obj, problem.op.n);
  return (w.array() * residual.array().square()).sum() +
         penalty_term(control, obj.beta);
}

ControlSignal gradient(const ControlProblem& problem,
                       const ControlSignal& control, const ObjectiveSpec& obj) {
  ValueAndGradient vg = objective_with_gradient(problem, control, obj);
  ControlSignal g = make_control_signal(control.frame, control.n_channels,
                                        control.n_steps);
  g.values = std::move(vg.gradient);
  return g;
}

namespace {

/// Two-loop L-BFGS recursion; pairs ordered oldest first.
VectorXd lbfgs_direction(const std::deque<std::pair<VectorXd, VectorXd>>& mem,
                         const VectorXd& g) {
  VectorXd q = g;
  if (mem.empty()) return -q;
  std::vector<double> alpha(mem.size());
  std::vector<double> rho(mem.size());
  for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
    const auto& [s, yv] = mem[i];
    rho[i] = 1.0 / yv.dot(s);
    alpha[i] = rho[i] * s.dot(q);
    q -= alpha[i] * yv;
  }
  const auto& [s_last, y_last] = mem.back();
  q *= s_last.dot(y_last) / y_last.squaredNorm();
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const auto& [s, yv] = mem[i];
    const double beta = rho[i] * yv.dot(q);
    q += (alpha[i] - beta) * s;
  }
  return -q;
}

}  // namespace

SynthesisResult minimize(const ControlProblem& problem, const ObjectiveSpec& obj,
                         const ControlSignal& init_control,
                         const MinimizeOptions& options) {
  check_problem(problem, init_control);
  constexpr double kArmijoC = 1e-4;

  auto finish = [&](const ControlSignal& control, int iterations,
                    double gradient_norm, bool converged) {
    SynthesisResult r;
    r.control = control;
    r.trajectory = integrate(problem.op, problem.spec, &problem.layout,
                             &control, problem.y0, problem.frame,
                             {.n_steps = problem.n_steps});
    r.objective_value = evaluate_objective(problem, control, obj);
    r.terminal_norm = weighted_norm(r.trajectory.terminal_state);
    r.control_cost = control.l2_norm();
    r.iterations = iterations;
    r.gradient_norm = gradient_norm;
    r.converged = converged;
    return r;
  };

  const double j0 = evaluate_objective(problem, init_control, obj);
  if (j0 <= std::numeric_limits<double>::min())
    return finish(init_control, 0, 0.0, true);  // already at the target

  // All line-search work happens on the normalized objective J/J0 so that
  // step acceptance is scale-free even for beta near zero.
  ControlSignal control = init_control;
  if (control.stored_frame != control.frame.frame) {
    // gradients live in the current frame; materialize a converted signal
    // once so values and search directions share that frame
    control.values = control.materialized();
    control.stored_frame = control.frame.frame;
  }
  auto eval_normalized = [&](const ControlSignal& c) {
    try {
      return evaluate_objective(problem, c, obj) / j0;
    } catch (const DivergenceError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  ValueAndGradient vg = objective_with_gradient(problem, control, obj);
  double f = vg.value / j0;
  MatrixXd grad = vg.gradient / j0;
  double grad_norm = grad.norm();

  std::deque<std::pair<VectorXd, VectorXd>> memory;
  int iterations = 0;
  bool converged = grad_norm <= options.grad_tol;
  bool line_search_ok = true;

  while (!converged && line_search_ok && iterations < options.max_iters) {
    const VectorXd g_flat = grad.reshaped();
    VectorXd d = lbfgs_direction(memory, g_flat);
    double slope = d.dot(g_flat);
    if (!d.allFinite() || slope >= 0.0) {
      memory.clear();
      d = -g_flat;
      slope = -g_flat.squaredNorm();
    }

    double alpha = memory.empty() ? 1.0 / std::max(1.0, grad_norm) : 1.0;
    ControlSignal candidate = control;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      candidate.values =
          control.values + alpha * d.reshaped(grad.rows(), grad.cols());
      f_new = eval_normalized(candidate);
      if (f_new <= f + kArmijoC * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      line_search_ok = false;
      break;
    }

    ValueAndGradient vg_new = objective_with_gradient(problem, candidate, obj);
    MatrixXd grad_new = vg_new.gradient / j0;
    const VectorXd s = (candidate.values - control.values).reshaped();
    const VectorXd yv = (grad_new - grad).reshaped();
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      memory.emplace_back(s, yv);
      if (static_cast<int>(memory.size()) > options.memory)
        memory.pop_front();
    }

    control = candidate;
    f = vg_new.value / j0;
    grad = std::move(grad_new);
    grad_norm = grad.norm();
    ++iterations;
    converged = grad_norm <= options.grad_tol;
  }

  return finish(control, iterations, grad_norm, converged);
}

namespace {

/// Junction flux of an extended trajectory, averaged over the endpoints of
/// step k: the discrete counterpart of (y_left - y_right)(tau) consistent
/// with the midpoint scheme.
double step_flux(const Trajectory& traj, int row_out, int row_in, int k) {
  const auto& s = traj.states;
  return 0.5 * ((s(row_out, k) - s(row_in, k)) +
                (s(row_out, k + 1) - s(row_in, k + 1)));
}

Trajectory restrict_trajectory(const Trajectory& extended, int n, double T) {
  const int w = extension_width(n);
  Trajectory inner;
  inner.frame = rescaled_frame(n, T);
  inner.n_steps = extended.n_steps;
  inner.store_stride = 1;
  inner.stored_steps = extended.stored_steps;
  inner.states = extended.states.middleRows(w + 1, n);
  inner.terminal_state = inner.states.col(inner.states.cols() - 1);
  const int knots = extended.n_steps + 1;
  inner.norm2.resize(knots);
  inner.mean.resize(knots);
  inner.maxabs.resize(knots);
  for (int k = 0; k < knots; ++k) {
    const auto col = inner.states.col(k);
    inner.norm2[k] = weighted_norm(col);
    inner.mean[k] = col.mean();
    inner.maxabs[k] = col.cwiseAbs().maxCoeff();
  }
  return inner;
}

}  // namespace

double boundary_flux_norm(const Trajectory& extended, int n) {
  const int w = extension_width(n);
  if (extended.n_agents() != n + 2 * w + 1)
    throw std::invalid_argument("boundary_flux_norm: not an extended trajectory of n");
  if (!extended.dense())
    throw std::invalid_argument("boundary_flux_norm: needs a dense trajectory");
  const double dt = extended.frame.dt(extended.n_steps);
  double left = 0.0, right = 0.0;
  for (int k = 0; k < extended.n_steps; ++k) {
    const double f1 = step_flux(extended, w, w + 1, k);          // y_0 - y_1
    const double f2 = step_flux(extended, w + n + 1, w + n, k);  // y_{n+1} - y_n
    left += f1 * f1;
    right += f2 * f2;
  }
  return n * (std::sqrt(dt * left) + std::sqrt(dt * right));
}

ExtensionSynthesis synthesize_boundary_via_extension(
    int n, const NonlinearitySpec& spec, const VectorXd& y0, double T,
    const ObjectiveSpec& obj, const ExtensionOptions& options) {
  if (n < 2) throw std::invalid_argument("extension: n >= 2");
  if (y0.size() != n) throw std::invalid_argument("extension: y0 length != n");
  if (spec.scaling != Scaling::InverseNSquared)
    throw std::invalid_argument(
        "extension construction requires the 1/n^2 nonlinearity scaling");

  const int w = extension_width(n);
  const ControlLayout layout_ext = build_extension_block_layout(n);
  const ChainOperatord op_ext =
      build_chain_operator(layout_ext.n_agents, Flavor::Dirichlet);
  const int n_steps = options.n_steps > 0 ? options.n_steps : default_n_steps(n);

  // Zero extension of the initial state: with both sides weighted by 1/n the
  // extended norm equals the original one, inside [|y0|, 2|y0|].
  VectorXd y0_ext = VectorXd::Zero(layout_ext.n_agents);
  y0_ext.segment(w + 1, n) = y0;

  // The time scaling stays that of the embedded n-agent network.
  const TimeFrame frame = rescaled_frame(n, T);

  ControlProblem problem{op_ext, spec, layout_ext, y0_ext, frame, n_steps};
  const ControlSignal init =
      make_control_signal(frame, layout_ext.channels(), n_steps);

  ExtensionSynthesis out;
  out.extended_result = minimize(problem, obj, init, options.minimize);

  // Dense re-run for restriction and flux extraction; kept in the result so
  // callers can audit the junction values.
  const Trajectory extended =
      integrate(op_ext, spec, &layout_ext, &out.extended_result.control,
                y0_ext, frame, {.n_steps = n_steps, .store_stride = 1});
  out.extended_result.trajectory = extended;

  out.inner_trajectory = restrict_trajectory(extended, n, T);
  out.flux_norm = boundary_flux_norm(extended, n);

  // u_1 = (n^2/3)(y_0 - y_1), u_2 = (n^2/3)(y_{n+1} - y_n), flux averaged
  // per step; the last knot carries the terminal pointwise flux.
  const double gain = static_cast<double>(n) * n / 3.0;
  ControlSignal boundary = make_control_signal(frame, 2, n_steps);
  for (int k = 0; k < n_steps; ++k) {
    boundary.values(0, k) = gain * step_flux(extended, w, w + 1, k);
    boundary.values(1, k) = gain * step_flux(extended, w + n + 1, w + n, k);
  }
  boundary.values(0, n_steps) =
      gain * (extended.states(w, n_steps) - extended.states(w + 1, n_steps));
  boundary.values(1, n_steps) =
      gain *
      (extended.states(w + n + 1, n_steps) - extended.states(w + n, n_steps));
  out.boundary_control = boundary;

  const ChainOperatord op_orig = build_chain_operator(n, Flavor::Neumann);
  const ControlLayout layout_orig = build_two_boundary_layout(n);
  out.reintegrated =
      integrate(op_orig, spec, &layout_orig, &boundary, y0, frame,
                {.n_steps = n_steps, .store_stride = 1});

  double mismatch = 0.0;
  for (Index k = 0; k < out.reintegrated.states.cols(); ++k)
    mismatch = std::max(
        mismatch, weighted_norm((out.inner_trajectory.states.col(k) -
                                 out.reintegrated.states.col(k)).eval()));
  out.restriction_mismatch = mismatch;
  return out;
}

}  // namespace chainctl
