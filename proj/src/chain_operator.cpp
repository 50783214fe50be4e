#include "chainctl/chain_operator.hpp"

#include <Eigen/Eigenvalues>

namespace chainctl {

std::string to_string(Flavor f) {
  return f == Flavor::Neumann ? "neumann" : "dirichlet";
}

std::string to_string(Scaling s) {
  switch (s) {
    case Scaling::InverseNSquared: return "inv-n2";
    case Scaling::InverseN: return "inv-n";
    case Scaling::Unscaled: return "unscaled";
  }
  return "?";
}

std::string to_string(Frame f) {
  return f == Frame::Physical ? "physical" : "rescaled";
}

EigenDecomposition eigen_decompose(const ChainOperatord& op) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(op.dense());
  // Eigen sorts ascending; the interface promises descending.
  EigenDecomposition d;
  d.eigenvalues = solver.eigenvalues().reverse();
  d.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return d;
}

}  // namespace chainctl
