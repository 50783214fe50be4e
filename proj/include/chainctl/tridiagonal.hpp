#pragma once

#include <stdexcept>

#include "chainctl/types.hpp"

namespace chainctl {

/// Thomas factorization of a tridiagonal matrix, reusable across solves.
/// No pivoting: intended for the strictly diagonally dominant systems
/// (I - c*A with c > 0) arising from the implicit half of the time stepper.
template <typename Scalar = double>
class TridiagonalLU {
 public:
  TridiagonalLU() = default;

  /// lower/upper have size n-1, diag has size n.
  TridiagonalLU(const Vector<Scalar>& lower, const Vector<Scalar>& diag,
                const Vector<Scalar>& upper)
      : lower_(lower), inv_pivot_(diag.size()), upper_ratio_(upper.size()) {
    const Index n = diag.size();
    if (n < 1 || lower.size() != n - 1 || upper.size() != n - 1)
      throw std::invalid_argument("tridiagonal band sizes inconsistent");
    Scalar pivot = diag[0];
    inv_pivot_[0] = Scalar(1) / pivot;
    for (Index i = 1; i < n; ++i) {
      upper_ratio_[i - 1] = upper[i - 1] * inv_pivot_[i - 1];
      pivot = diag[i] - lower[i - 1] * upper_ratio_[i - 1];
      inv_pivot_[i] = Scalar(1) / pivot;
    }
  }

  Index size() const { return inv_pivot_.size(); }

  void solve_in_place(Eigen::Ref<Vector<Scalar>> rhs) const {
    const Index n = size();
    rhs[0] *= inv_pivot_[0];
    for (Index i = 1; i < n; ++i)
      rhs[i] = (rhs[i] - lower_[i - 1] * rhs[i - 1]) * inv_pivot_[i];
    for (Index i = n - 2; i >= 0; --i) rhs[i] -= upper_ratio_[i] * rhs[i + 1];
  }

  Vector<Scalar> solve(Vector<Scalar> rhs) const {
    solve_in_place(rhs);
    return rhs;
  }

 private:
  Vector<Scalar> lower_;
  Vector<Scalar> inv_pivot_;
  Vector<Scalar> upper_ratio_;
};

}  // namespace chainctl
