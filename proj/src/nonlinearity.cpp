#include "chainctl/nonlinearity.hpp"

#include <cmath>
#include <stdexcept>

namespace chainctl {

double NonlinearitySpec::deriv(double s) const {
  const double x = s + consensus_shift;
  if (derivative) return derivative(x);
  if (!numeric_derivative_ok)
    throw std::invalid_argument(
        "nonlinearity '" + name +
        "' has no analytic derivative; supply one or enable "
        "numeric_derivative_ok");
  const double h = 1e-6 * (1.0 + std::abs(x));
  return (g(x + h) - g(x - h)) / (2.0 * h);
}

double NonlinearitySpec::scale_factor(int n) const {
  const double dn = static_cast<double>(n);
  switch (scaling) {
    case Scaling::InverseNSquared: return 1.0 / (dn * dn);
    case Scaling::InverseN: return 1.0 / dn;
    case Scaling::Unscaled: return 1.0;
  }
  return 1.0;
}

VectorXd apply_nonlinearity(const NonlinearitySpec& spec, int n,
                            const Eigen::Ref<const VectorXd>& state) {
  const double factor = spec.scale_factor(n);
  VectorXd out(state.size());
  for (Index i = 0; i < state.size(); ++i) out[i] = factor * spec.eval(state[i]);
  return out;
}

VectorXd apply_nonlinearity_derivative(const NonlinearitySpec& spec, int n,
                                       const Eigen::Ref<const VectorXd>& state) {
  const double factor = spec.scale_factor(n);
  VectorXd out(state.size());
  for (Index i = 0; i < state.size(); ++i) out[i] = factor * spec.deriv(state[i]);
  return out;
}

double estimate_lipschitz(const NonlinearitySpec& spec, double radius) {
  if (radius <= 0.0) throw std::invalid_argument("lipschitz radius must be > 0");
  constexpr int kSamples = 20001;
  double sup = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const double s = -radius + 2.0 * radius * i / (kSamples - 1);
    if (std::abs(s) < 1e-12) continue;
    sup = std::max(sup, std::abs(spec.eval(s) / s));
  }
  // g(0) = G'(0) by l'Hopital; central difference at the origin.
  const double h = 1e-6;
  sup = std::max(sup, std::abs((spec.eval(h) - spec.eval(-h)) / (2.0 * h)));
  return sup;
}

double resolved_lipschitz(const NonlinearitySpec& spec,
                          const Eigen::Ref<const VectorXd>& y0) {
  if (spec.lipschitz >= 0.0) return spec.lipschitz;
  const double radius =
      std::max(1.0, 10.0 * (y0.size() ? y0.cwiseAbs().maxCoeff() : 0.0));
  return estimate_lipschitz(spec, radius);
}

void validate_nonlinearity(const NonlinearitySpec& spec) {
  if (!spec.g) throw std::invalid_argument("nonlinearity has no scalar map");
  const double at_zero = spec.eval(0.0);
  if (std::abs(at_zero) > 1e-12 * (1.0 + std::abs(spec.consensus_shift)))
    throw std::invalid_argument(
        "nonlinearity '" + spec.name +
        "' does not vanish at the shifted consensus state");
}

NonlinearitySpec nonlinearity_zero() {
  NonlinearitySpec spec;
  spec.g = [](double) { return 0.0; };
  spec.derivative = [](double) { return 0.0; };
  spec.lipschitz = 0.0;
  spec.name = "zero";
  return spec;
}

NonlinearitySpec nonlinearity_gauss() {
  NonlinearitySpec spec;
  spec.g = [](double s) { return s * std::exp(-s * s); };
  spec.derivative = [](double s) {
    return std::exp(-s * s) * (1.0 - 2.0 * s * s);
  };
  spec.lipschitz = 1.0;  // g(s) = exp(-s^2)
  spec.name = "gauss";
  return spec;
}

NonlinearitySpec nonlinearity_tanh() {
  NonlinearitySpec spec;
  spec.g = [](double s) { return std::tanh(s); };
  spec.derivative = [](double s) {
    const double t = std::tanh(s);
    return 1.0 - t * t;
  };
  spec.lipschitz = 1.0;
  spec.name = "tanh";
  return spec;
}

NonlinearitySpec nonlinearity_linear(double c) {
  NonlinearitySpec spec;
  spec.g = [c](double s) { return c * s; };
  spec.derivative = [c](double) { return c; };
  spec.lipschitz = std::abs(c);
  spec.name = "linear";
  return spec;
}

NonlinearitySpec make_nonlinearity(const std::string& name, double param) {
  if (name == "zero") return nonlinearity_zero();
  if (name == "gauss") return nonlinearity_gauss();
  if (name == "tanh") return nonlinearity_tanh();
  if (name == "linear") return nonlinearity_linear(param);
  throw std::invalid_argument("unknown nonlinearity '" + name + "'");
}

}  // namespace chainctl
