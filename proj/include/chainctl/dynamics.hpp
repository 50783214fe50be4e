#pragma once

#include <cmath>
#include <vector>

#include "chainctl/chain_operator.hpp"
#include "chainctl/control_layout.hpp"
#include "chainctl/nonlinearity.hpp"
#include "chainctl/types.hpp"

namespace chainctl {

/// Time coordinate of a run on an n-agent chain. The physical and rescaled
/// frames are linked by t = n^2 tau; in the rescaled frame the drift matrix
/// is n^2 A and the scaled nonlinearity is multiplied by n^2.
struct TimeFrame {
  Frame frame = Frame::Rescaled;
  double horizon = 1.0;  // total time in this frame's variable
  int n_agents = 0;      // the n of t = n^2 tau

  double n_squared() const {
    return static_cast<double>(n_agents) * static_cast<double>(n_agents);
  }
  double dt(int n_steps) const { return horizon / n_steps; }
  double knot(int k, int n_steps) const { return horizon * k / n_steps; }

  /// The same window seen from the other frame.
  TimeFrame counterpart() const {
    const double h = frame == Frame::Physical ? horizon / n_squared()
                                              : horizon * n_squared();
    return {frame == Frame::Physical ? Frame::Rescaled : Frame::Physical, h,
            n_agents};
  }
};

inline TimeFrame rescaled_frame(int n, double T) {
  return {Frame::Rescaled, T, n};
}
inline TimeFrame physical_frame(int n, double horizon_t) {
  return {Frame::Physical, horizon_t, n};
}

bool same_window(const TimeFrame& a, const TimeFrame& b);

/// Discrete weighted Euclidean norm |y|_2 = sqrt(1/n sum y_j^2), the analogue
/// of the L^2(0,1) norm on the chain.
template <typename Derived>
double weighted_norm(const Eigen::MatrixBase<Derived>& state) {
  return std::sqrt(state.squaredNorm() / static_cast<double>(state.size()));
}

double weighted_norm(const Eigen::Ref<const VectorXd>& state, Index n);

/// Multi-channel control sampled on a uniform grid of n_steps+1 knots,
/// interpreted piecewise-constant per step (knot k holds on step k; the last
/// knot carries no quadrature weight).
///
/// Values are stored in the frame the signal was created in and rescaled
/// lazily on read: u(tau) = n^2 v(n^2 tau) is then exact on every knot and a
/// round-trip conversion returns the original bit for bit, which eager
/// rescaling of the stored matrix cannot guarantee in floating point.
struct ControlSignal {
  TimeFrame frame;       // frame the signal currently presents
  int n_channels = 0;
  int n_steps = 0;
  MatrixXd values;       // n_channels x (n_steps+1), in stored_frame
  Frame stored_frame = Frame::Rescaled;

  /// Factor mapping stored values into the current frame.
  double read_factor() const {
    if (stored_frame == frame.frame) return 1.0;
    return stored_frame == Frame::Physical ? frame.n_squared()
                                           : 1.0 / frame.n_squared();
  }

  VectorXd knot_values(int k) const { return values.col(k) * read_factor(); }

  /// Values materialized in the current frame.
  MatrixXd materialized() const { return values * read_factor(); }

  /// L^2 norm over the horizon in the current frame, piecewise-constant
  /// quadrature, channels summed.
  double l2_norm() const;
};

ControlSignal make_control_signal(const TimeFrame& frame, int n_channels,
                                  int n_steps);
ControlSignal make_control_signal(const TimeFrame& frame, MatrixXd values);

/// Re-expresses the signal in target_frame (t = n^2 tau on the same window).
/// A round-trip is the identity, bit-exact.
ControlSignal convert_signal(const ControlSignal& signal,
                             const TimeFrame& target_frame);

/// State history of one integration. States are stored every store_stride
/// steps plus the terminal state; the cheap per-step diagnostics cover every
/// step.
struct Trajectory {
  TimeFrame frame;
  int n_steps = 0;
  int store_stride = 1;
  std::vector<int> stored_steps;  // ascending, first 0, last n_steps
  MatrixXd states;                // n x stored_steps.size()
  VectorXd terminal_state;
  VectorXd norm2;   // per-step weighted norm, size n_steps+1
  VectorXd mean;    // per-step mean
  VectorXd maxabs;  // per-step max |y_j|

  Index n_agents() const { return states.rows(); }
  bool dense() const { return store_stride == 1; }
  double tau_of_step(int k) const;
  double t_of_step(int k) const;
};

struct IntegrateOptions {
  int n_steps = 0;       // required >= 1
  int store_stride = 0;  // 0 = ceil(n_steps/1000)
};

inline int default_n_steps(int n) { return std::max(4000, 20 * n); }

/// IMEX midpoint step: the constant stiff drift (n^2 A rescaled, A physical)
/// is treated implicitly with theta = 1/2, nonlinearity and control
/// explicitly; each step solves one precomputed tridiagonal system.
/// Throws DivergenceError when the state leaves the finite range.
Trajectory integrate(const ChainOperatord& op, const NonlinearitySpec& spec,
                     const ControlLayout* layout, const ControlSignal* control,
                     const VectorXd& y0, const TimeFrame& frame,
                     const IntegrateOptions& opts);

/// Free dynamics.
Trajectory integrate(const ChainOperatord& op, const NonlinearitySpec& spec,
                     const VectorXd& y0, const TimeFrame& frame,
                     const IntegrateOptions& opts);

}  // namespace chainctl
