#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace chainctl {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;

/// Corner structure of the chain Laplacian: zero-flux corners (row sums 0)
/// versus absorbing corners (-2/3 on the whole diagonal).
enum class Flavor { Neumann, Dirichlet };

/// Factor applied to the nonlinearity as a function of the chain size.
enum class Scaling { InverseNSquared, InverseN, Unscaled };

/// Time variable of a run: t on [0, N^2 T] or tau = t/N^2 on [0, T].
enum class Frame { Physical, Rescaled };

std::string to_string(Flavor f);
std::string to_string(Scaling s);
std::string to_string(Frame f);

/// The integrator hit a non-finite state (typically overflow from an
/// unscaled nonlinearity at large N). Carries the offending step.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(int step)
      : std::runtime_error("state diverged at step " + std::to_string(step)),
        step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Configuration text could not be parsed or violates a range constraint.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(int line, const std::string& what)
      : std::invalid_argument("config error at line " + std::to_string(line) +
                              ": " + what),
        line_(line) {}
  explicit ConfigError(const std::string& what)
      : std::invalid_argument("config error: " + what), line_(0) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace chainctl
