#pragma once

#include <functional>
#include <string>

#include "chainctl/types.hpp"

namespace chainctl {

/// Scalar self-interaction G acting componentwise, with its size scaling.
/// The effective per-agent map is G_n(s) = factor(n) * G(s + consensus_shift)
/// with factor 1/n^2, 1/n or 1 depending on `scaling`.
/// Only componentwise maps are supported; per-agent gains of the form
/// g_j(y) y_j would need a vector-aware variant of this type.
///
/// `lipschitz` is the sup of |g| with g(s) = G(s)/s; negative means unknown
/// (use estimate_lipschitz). `derivative` may be empty; gradient code then
/// falls back to a central difference only when numeric_derivative_ok is set.
struct NonlinearitySpec {
  std::function<double(double)> g;
  std::function<double(double)> derivative;
  bool numeric_derivative_ok = false;
  double lipschitz = -1.0;
  Scaling scaling = Scaling::InverseNSquared;
  double consensus_shift = 0.0;
  std::string name = "custom";

  double eval(double s) const { return g(s + consensus_shift); }

  /// dG/ds at s (shift applied). Throws if no analytic derivative is given
  /// and the numeric fallback is not enabled.
  double deriv(double s) const;

  double scale_factor(int n) const;
};

VectorXd apply_nonlinearity(const NonlinearitySpec& spec, int n,
                            const Eigen::Ref<const VectorXd>& state);

/// Componentwise derivative of the scaled map, d G_n / d y_j.
VectorXd apply_nonlinearity_derivative(const NonlinearitySpec& spec, int n,
                                       const Eigen::Ref<const VectorXd>& state);

/// sup |G(s)/s| by dense sampling on [-radius, radius] plus a central
/// difference at the origin.
double estimate_lipschitz(const NonlinearitySpec& spec, double radius);

/// The supplied bound when present, otherwise estimated on the radius
/// 10 max|y0| (at least 1) covering the states a run starting at y0 visits.
double resolved_lipschitz(const NonlinearitySpec& spec,
                          const Eigen::Ref<const VectorXd>& y0);

/// Checks G(0) = 0 after the consensus shift; throws invalid_argument if not.
void validate_nonlinearity(const NonlinearitySpec& spec);

NonlinearitySpec nonlinearity_zero();
/// G(s) = s exp(-s^2); g = exp(-s^2), sup |g| = 1.
NonlinearitySpec nonlinearity_gauss();
/// G(s) = tanh(s); g = tanh(s)/s, sup |g| = 1.
NonlinearitySpec nonlinearity_tanh();
/// G(s) = c s.
NonlinearitySpec nonlinearity_linear(double c);

/// Lookup by name ("zero", "gauss", "tanh", "linear"); `param` is the linear
/// slope and is ignored by the others.
NonlinearitySpec make_nonlinearity(const std::string& name, double param = 1.0);

}  // namespace chainctl
