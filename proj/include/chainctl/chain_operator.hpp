#pragma once

#include <stdexcept>

#include "chainctl/types.hpp"

namespace chainctl {

/// Tridiagonal diffusion operator of the 1-d chain of n agents, carrying the
/// 1/3 averaging factor. Off-diagonals are 1/3; the diagonal is -2/3 except
/// at Neumann corners, where it is -1/3 so that rows sum to zero.
///
/// The matrix is symmetric and never stored densely: apply() runs the
/// three-band stencil in O(n), dense() materializes it on demand.
template <typename Scalar = double>
struct ChainOperator {
  int n = 0;
  Flavor flavor = Flavor::Neumann;

  static constexpr Scalar off_value() { return Scalar(1) / Scalar(3); }

  Scalar diag_value(Index i) const {
    const bool corner = (i == 0 || i == n - 1);
    if (flavor == Flavor::Neumann && corner) return Scalar(-1) / Scalar(3);
    return Scalar(-2) / Scalar(3);
  }

  /// y = A x, three-band stencil.
  Vector<Scalar> apply(const Eigen::Ref<const Vector<Scalar>>& x) const {
    Vector<Scalar> y(n);
    apply_into(x, y);
    return y;
  }

  void apply_into(const Eigen::Ref<const Vector<Scalar>>& x,
                  Eigen::Ref<Vector<Scalar>> y) const {
    const Scalar o = off_value();
    for (Index i = 0; i < n; ++i) {
      Scalar acc = diag_value(i) * x[i];
      if (i > 0) acc += o * x[i - 1];
      if (i + 1 < n) acc += o * x[i + 1];
      y[i] = acc;
    }
  }

  Matrix<Scalar> dense() const {
    Matrix<Scalar> m = Matrix<Scalar>::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      m(i, i) = diag_value(i);
      if (i + 1 < n) {
        m(i, i + 1) = off_value();
        m(i + 1, i) = off_value();
      }
    }
    return m;
  }

  Vector<Scalar> diagonal() const {
    Vector<Scalar> d(n);
    for (Index i = 0; i < n; ++i) d[i] = diag_value(i);
    return d;
  }
};

using ChainOperatord = ChainOperator<double>;

template <typename Scalar = double>
ChainOperator<Scalar> build_chain_operator(int n, Flavor flavor) {
  if (n < 2)
    throw std::invalid_argument("chain operator needs n >= 2, got n=" +
                                std::to_string(n));
  return ChainOperator<Scalar>{n, flavor};
}

struct EigenDecomposition {
  VectorXd eigenvalues;   // sorted descending, all <= 0
  MatrixXd eigenvectors;  // orthonormal columns, eigenvectors.col(k) ~ eigenvalues[k]
};

/// Full spectral decomposition of the (symmetric) chain operator.
EigenDecomposition eigen_decompose(const ChainOperatord& op);

}  // namespace chainctl
