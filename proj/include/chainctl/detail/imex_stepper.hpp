#pragma once

#include <stdexcept>

#include "chainctl/chain_operator.hpp"
#include "chainctl/control_layout.hpp"
#include "chainctl/nonlinearity.hpp"
#include "chainctl/dynamics.hpp"
#include "chainctl/tridiagonal.hpp"

namespace chainctl::detail {

/// One IMEX midpoint step,
///   (I - dt/2 D) y_{k+1} = (I + dt/2 D) y_k + dt (phi G_n(y_k) + B u_k),
/// with D = phi A and phi = n^2 in the rescaled frame, 1 in the physical
/// one. The adjoint sweep reuses the same pieces, which keeps the discrete
/// gradient exact for this map.
struct ImexStepper {
  const ChainOperatord& op;
  const NonlinearitySpec& spec;
  const ControlLayout* layout;  // may be null
  int n;
  int scale_n;
  double dt;
  double half;     // dt/2 * phi
  double nl_gain;  // dt * phi * scale_factor(scale_n)
  TridiagonalLU<double> lu;  // I - dt/2 D

  ImexStepper(const ChainOperatord& op_, const NonlinearitySpec& spec_,
              const ControlLayout* layout_, const TimeFrame& frame,
              int n_steps)
      : op(op_), spec(spec_), layout(layout_), n(op_.n),
        scale_n(frame.n_agents), dt(frame.dt(n_steps)) {
    if (n_steps < 1) throw std::invalid_argument("stepper: n_steps >= 1");
    if (frame.n_agents < 1 || frame.horizon <= 0.0)
      throw std::invalid_argument("stepper: invalid time frame");
    const double phi = frame.frame == Frame::Rescaled ? frame.n_squared() : 1.0;
    half = 0.5 * dt * phi;
    nl_gain = dt * phi * spec.scale_factor(scale_n);
    VectorXd diag_imp(n), band(n - 1);
    for (int i = 0; i < n; ++i) diag_imp[i] = 1.0 - half * op.diag_value(i);
    band.setConstant(-half * ChainOperatord::off_value());
    lu = TridiagonalLU<double>(band, diag_imp, band);
  }

  /// out = (I + dt/2 D) y
  void explicit_part(const VectorXd& y, VectorXd& out) const {
    op.apply_into(y, out);
    out = y + half * out;
  }

  /// In-place advance; u may be null for free dynamics.
  void step(VectorXd& y, const VectorXd* u, VectorXd& scratch) const {
    explicit_part(y, scratch);
    for (int i = 0; i < n; ++i) scratch[i] += nl_gain * spec.eval(y[i]);
    if (u) layout->add_scaled(*u, dt, scratch);
    lu.solve_in_place(scratch);
    y.swap(scratch);
  }
};

}  // namespace chainctl::detail
