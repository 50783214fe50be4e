#pragma once

#include "chainctl/chain_operator.hpp"
#include "chainctl/control_layout.hpp"

namespace chainctl {

/// Exact rational elimination on the n x (n m) Kalman block matrix is cheap
/// up to here; beyond, entries of A^k B grow and the Hautus spectral test is
/// numerically superior.
inline constexpr int kRankExactThreshold = 24;

/// |B^T v|_2 > tol * |v|_2 declares an eigenvector visible to the controls.
/// Eigenvector components of the chain Laplacian are bounded below by about
/// 1/sqrt(n) at the boundary, far above this threshold.
inline constexpr double kHautusTolerance = 1e-9;

enum class RankMethod { ExactRational, Hautus };

struct KalmanRank {
  int rank = 0;
  bool satisfied = false;
  RankMethod method = RankMethod::ExactRational;
};

/// rank [B, AB, ..., A^{n-1} B]; satisfied iff rank == n. Dispatches to the
/// exact rational path for n <= kRankExactThreshold and to the Hautus test
/// above it.
KalmanRank kalman_rank(const ChainOperatord& op, const ControlLayout& layout);

/// Fraction-free Gaussian elimination over arbitrary-precision integers on
/// the Kalman matrix of (3A, B); the per-block scaling by 3^k leaves the
/// rank unchanged.
KalmanRank kalman_rank_exact(const ChainOperatord& op,
                             const ControlLayout& layout);

/// Spectral test: no eigenvector of A may be annihilated by B^T. The chain
/// operators have simple spectra, so the Kalman rank equals n minus the
/// number of annihilated eigenvectors.
KalmanRank kalman_rank_hautus(const ChainOperatord& op,
                              const ControlLayout& layout,
                              double tol = kHautusTolerance);

}  // namespace chainctl
