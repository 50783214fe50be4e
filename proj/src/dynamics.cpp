#include "chainctl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "chainctl/detail/imex_stepper.hpp"

namespace chainctl {

bool same_window(const TimeFrame& a, const TimeFrame& b) {
  if (a.n_agents != b.n_agents) return false;
  const double ta = a.frame == Frame::Physical ? a.horizon
                                               : a.horizon * a.n_squared();
  const double tb = b.frame == Frame::Physical ? b.horizon
                                               : b.horizon * b.n_squared();
  return std::abs(ta - tb) <= 1e-12 * std::max(ta, tb);
}

double weighted_norm(const Eigen::Ref<const VectorXd>& state, Index n) {
  if (n < 1 || state.size() != n)
    throw std::invalid_argument("weighted_norm: state length must equal n >= 1");
  return weighted_norm(state);
}

double ControlSignal::l2_norm() const {
  const double dt = frame.dt(n_steps);
  const double f = read_factor();
  double acc = 0.0;
  for (int k = 0; k < n_steps; ++k) acc += (values.col(k) * f).squaredNorm();
  return std::sqrt(dt * acc);
}

ControlSignal make_control_signal(const TimeFrame& frame, int n_channels,
                                  int n_steps) {
  if (n_channels < 1 || n_steps < 1)
    throw std::invalid_argument("control signal needs channels >= 1, steps >= 1");
  ControlSignal s;
  s.frame = frame;
  s.n_channels = n_channels;
  s.n_steps = n_steps;
  s.values = MatrixXd::Zero(n_channels, n_steps + 1);
  s.stored_frame = frame.frame;
  return s;
}

ControlSignal make_control_signal(const TimeFrame& frame, MatrixXd values) {
  ControlSignal s;
  s.frame = frame;
  s.n_channels = static_cast<int>(values.rows());
  s.n_steps = static_cast<int>(values.cols()) - 1;
  if (s.n_channels < 1 || s.n_steps < 1)
    throw std::invalid_argument("control values need >= 1 row and >= 2 columns");
  s.values = std::move(values);
  s.stored_frame = frame.frame;
  return s;
}

ControlSignal convert_signal(const ControlSignal& signal,
                             const TimeFrame& target_frame) {
  if (target_frame.frame == signal.frame.frame) {
    if (!same_window(signal.frame, target_frame))
      throw std::invalid_argument("convert_signal: frames disagree beyond the t = n^2 tau scaling");
    return signal;
  }
  if (!same_window(signal.frame, target_frame))
    throw std::invalid_argument("convert_signal: mismatched n or horizon");
  ControlSignal out = signal;
  out.frame = target_frame;  // storage untouched: re-conversion is exact
  return out;
}

double Trajectory::tau_of_step(int k) const {
  const double time = frame.knot(k, n_steps);
  return frame.frame == Frame::Rescaled ? time : time / frame.n_squared();
}

double Trajectory::t_of_step(int k) const {
  const double time = frame.knot(k, n_steps);
  return frame.frame == Frame::Physical ? time : time * frame.n_squared();
}

Trajectory integrate(const ChainOperatord& op, const NonlinearitySpec& spec,
                     const ControlLayout* layout, const ControlSignal* control,
                     const VectorXd& y0, const TimeFrame& frame,
                     const IntegrateOptions& opts) {
  const int n = op.n;
  if (y0.size() != n)
    throw std::invalid_argument("integrate: y0 length does not match operator");
  if (opts.n_steps < 1) throw std::invalid_argument("integrate: n_steps >= 1");
  if (frame.n_agents < 1 || frame.horizon <= 0.0)
    throw std::invalid_argument("integrate: invalid time frame");
  if ((layout == nullptr) != (control == nullptr))
    throw std::invalid_argument("integrate: layout and control come together");
  if (layout) {
    if (layout->n_agents != n)
      throw std::invalid_argument("integrate: layout does not match operator");
    if (control->n_channels != layout->channels())
      throw std::invalid_argument("integrate: control channels mismatch layout");
    if (control->frame.frame != frame.frame ||
        control->frame.n_agents != frame.n_agents ||
        std::abs(control->frame.horizon - frame.horizon) >
            1e-12 * frame.horizon)
      throw std::invalid_argument("integrate: control frame mismatch");
    if (control->n_steps != opts.n_steps)
      throw std::invalid_argument("integrate: control knots must equal steps");
  }

  const int n_steps = opts.n_steps;
  // Rescaled frame: drift n^2 A and nonlinearity n^2 G_n; the scaling n is
  // the frame's n_agents, which on an extended chain is the embedded size.
  const detail::ImexStepper stepper(op, spec, layout, frame, n_steps);

  const int stride = opts.store_stride > 0
                         ? opts.store_stride
                         : std::max(1, (n_steps + 999) / 1000);

  Trajectory traj;
  traj.frame = frame;
  traj.n_steps = n_steps;
  traj.store_stride = stride;
  traj.norm2.resize(n_steps + 1);
  traj.mean.resize(n_steps + 1);
  traj.maxabs.resize(n_steps + 1);
  for (int k = 0; k <= n_steps; k += stride) traj.stored_steps.push_back(k);
  if (traj.stored_steps.back() != n_steps) traj.stored_steps.push_back(n_steps);
  traj.states.resize(n, static_cast<Index>(traj.stored_steps.size()));

  VectorXd y = y0;
  VectorXd scratch(n), u;
  std::size_t next_store = 0;

  auto record = [&](int k) {
    traj.norm2[k] = weighted_norm(y);
    traj.mean[k] = y.mean();
    traj.maxabs[k] = y.cwiseAbs().maxCoeff();
    if (next_store < traj.stored_steps.size() &&
        traj.stored_steps[next_store] == k)
      traj.states.col(static_cast<Index>(next_store++)) = y;
  };
  record(0);

  for (int k = 0; k < n_steps; ++k) {
    if (control) u = control->knot_values(k);
    stepper.step(y, control ? &u : nullptr, scratch);
    if (!y.allFinite()) throw DivergenceError(k + 1);
    record(k + 1);
  }

  traj.terminal_state = traj.states.col(traj.states.cols() - 1);
  return traj;
}

Trajectory integrate(const ChainOperatord& op, const NonlinearitySpec& spec,
                     const VectorXd& y0, const TimeFrame& frame,
                     const IntegrateOptions& opts) {
  return integrate(op, spec, nullptr, nullptr, y0, frame, opts);
}

}  // namespace chainctl
