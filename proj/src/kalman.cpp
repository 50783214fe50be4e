#include "chainctl/kalman.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <utility>
#include <vector>

namespace chainctl {

namespace {

using BigInt = boost::multiprecision::cpp_int;

void check_dims(const ChainOperatord& op, const ControlLayout& layout) {
  if (layout.n_agents != op.n)
    throw std::invalid_argument("layout rows (" +
                                std::to_string(layout.n_agents) +
                                ") do not match operator size (" +
                                std::to_string(op.n) + ")");
}

/// y = (3A) x over the integers: off-diagonals 1, diagonal -2 except
/// Neumann corners at -1.
std::vector<BigInt> apply_scaled(const ChainOperatord& op,
                                 const std::vector<BigInt>& x) {
  const int n = op.n;
  std::vector<BigInt> y(n);
  for (int i = 0; i < n; ++i) {
    const bool corner = (i == 0 || i == n - 1);
    const int d = (op.flavor == Flavor::Neumann && corner) ? -1 : -2;
    BigInt acc = d * x[i];
    if (i > 0) acc += x[i - 1];
    if (i + 1 < n) acc += x[i + 1];
    y[i] = std::move(acc);
  }
  return y;
}

/// Rank by fraction-free (Bareiss) elimination; all divisions are exact.
int bareiss_rank(std::vector<std::vector<BigInt>> m) {
  const int rows = static_cast<int>(m.size());
  const int cols = rows ? static_cast<int>(m[0].size()) : 0;
  BigInt prev = 1;
  int rank = 0;
  for (int col = 0; col < cols && rank < rows; ++col) {
    int pivot = -1;
    for (int r = rank; r < rows; ++r)
      if (m[r][col] != 0) {
        pivot = r;
        break;
      }
    if (pivot < 0) continue;
    std::swap(m[rank], m[pivot]);
    for (int r = rank + 1; r < rows; ++r) {
      for (int c = col + 1; c < cols; ++c)
        m[r][c] = (m[rank][col] * m[r][c] - m[r][col] * m[rank][c]) / prev;
      m[r][col] = 0;
    }
    prev = m[rank][col];
    ++rank;
  }
  return rank;
}

}  // namespace

KalmanRank kalman_rank_exact(const ChainOperatord& op,
                             const ControlLayout& layout) {
  check_dims(op, layout);
  const int n = op.n;
  const int m = layout.channels();

  // Columns of [B, (3A)B, ..., (3A)^{n-1}B]; scaling block k by 3^k leaves
  // the column space of the true Kalman matrix unchanged.
  std::vector<std::vector<BigInt>> kalman(n, std::vector<BigInt>(n * m, 0));
  for (int c = 0; c < m; ++c) {
    std::vector<BigInt> col(n, 0);
    col[layout.row_of(layout.active[c])] = 1;
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) kalman[i][k * m + c] = col[i];
      if (k + 1 < n) col = apply_scaled(op, col);
    }
  }

  KalmanRank result;
  result.method = RankMethod::ExactRational;
  result.rank = bareiss_rank(std::move(kalman));
  result.satisfied = (result.rank == n);
  return result;
}

KalmanRank kalman_rank_hautus(const ChainOperatord& op,
                              const ControlLayout& layout, double tol) {
  check_dims(op, layout);
  const EigenDecomposition d = eigen_decompose(op);
  int annihilated = 0;
  for (Index k = 0; k < d.eigenvectors.cols(); ++k) {
    const VectorXd v = d.eigenvectors.col(k);
    if (layout.gather(v).norm() <= tol * v.norm()) ++annihilated;
  }
  // The chain operators are irreducible tridiagonal, hence have simple
  // spectra: each annihilated eigenvector costs exactly one rank.
  KalmanRank result;
  result.method = RankMethod::Hautus;
  result.rank = op.n - annihilated;
  result.satisfied = (annihilated == 0);
  return result;
}

KalmanRank kalman_rank(const ChainOperatord& op, const ControlLayout& layout) {
  return op.n <= kRankExactThreshold ? kalman_rank_exact(op, layout)
                                     : kalman_rank_hautus(op, layout);
}

}  // namespace chainctl
