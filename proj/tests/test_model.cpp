#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "chainctl/chain_operator.hpp"
#include "chainctl/control_layout.hpp"
#include "chainctl/dynamics.hpp"
#include "chainctl/kalman.hpp"
#include "chainctl/nonlinearity.hpp"

using namespace chainctl;

namespace {

// Integer image of 3*A for the exact structural checks.
Eigen::MatrixXi scaled_dense(int n, Flavor flavor) {
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const bool corner = (i == 0 || i == n - 1);
    m(i, i) = (flavor == Flavor::Neumann && corner) ? -1 : -2;
    if (i + 1 < n) {
      m(i, i + 1) = 1;
      m(i + 1, i) = 1;
    }
  }
  return m;
}

// Characteristic polynomial of the chain operator by the tridiagonal
// determinant recurrence, followed by bisection on sign changes: an
// eigenvalue oracle that never touches a matrix eigensolver.
std::vector<double> charpoly_eigenvalues(const ChainOperatord& op) {
  const int n = op.n;
  // p_k(x) = det(A_k - x I), coefficients in ascending powers.
  std::vector<std::vector<double>> p(n + 1);
  p[0] = {1.0};
  const double off2 = (1.0 / 3.0) * (1.0 / 3.0);
  for (int k = 1; k <= n; ++k) {
    const double d = op.diag_value(k - 1);
    std::vector<double> next(k + 1, 0.0);
    for (int i = 0; i < k; ++i) {
      next[i] += d * p[k - 1][i];      // d * p_{k-1}
      next[i + 1] -= p[k - 1][i];      // -x * p_{k-1}
    }
    if (k >= 2)
      for (int i = 0; i < k - 1; ++i) next[i] -= off2 * p[k - 2][i];
    p[k] = std::move(next);
  }
  const auto& poly = p[n];
  auto eval = [&](double x) {
    double acc = 0.0;
    for (int i = n; i >= 0; --i) acc = acc * x + poly[i];
    return acc;
  };
  // All eigenvalues lie in [-4/3, 0]; scan for sign changes and bisect.
  std::vector<double> roots;
  const double lo = -4.0 / 3.0 - 1e-6, hi = 1e-6;
  const int grid = 200000;
  double prev_x = lo, prev_f = eval(lo);
  for (int i = 1; i <= grid; ++i) {
    const double x = lo + (hi - lo) * i / grid;
    const double f = eval(x);
    if (prev_f == 0.0) roots.push_back(prev_x);
    else if (prev_f * f < 0.0) {
      double a = prev_x, b = x;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        (eval(a) * eval(m) <= 0.0 ? b : a) = m;
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_f = f;
  }
  std::sort(roots.begin(), roots.end(), std::greater<>());
  return roots;
}

using Rat = boost::rational<boost::multiprecision::cpp_int>;

// Plain rational Gaussian elimination on [B, AB, ..., A^{n-1}B]: the naive
// counterpart of the fraction-free routine inside the library.
int rational_kalman_rank(const ChainOperatord& op, const ControlLayout& layout) {
  const int n = op.n;
  const int m = layout.channels();
  const Rat off(1, 3);
  auto apply = [&](const std::vector<Rat>& x) {
    std::vector<Rat> y(n);
    for (int i = 0; i < n; ++i) {
      const bool corner = (i == 0 || i == n - 1);
      const Rat d = (op.flavor == Flavor::Neumann && corner) ? Rat(-1, 3)
                                                             : Rat(-2, 3);
      y[i] = d * x[i];
      if (i > 0) y[i] += off * x[i - 1];
      if (i + 1 < n) y[i] += off * x[i + 1];
    }
    return y;
  };
  std::vector<std::vector<Rat>> mat(n, std::vector<Rat>(n * m, Rat(0)));
  for (int c = 0; c < m; ++c) {
    std::vector<Rat> col(n, Rat(0));
    col[layout.row_of(layout.active[c])] = Rat(1);
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) mat[i][k * m + c] = col[i];
      if (k + 1 < n) col = apply(col);
    }
  }
  int rank = 0;
  for (int col = 0; col < n * m && rank < n; ++col) {
    int pivot = -1;
    for (int r = rank; r < n; ++r)
      if (mat[r][col] != Rat(0)) {
        pivot = r;
        break;
      }
    if (pivot < 0) continue;
    std::swap(mat[rank], mat[pivot]);
    for (int r = rank + 1; r < n; ++r) {
      if (mat[r][col] == Rat(0)) continue;
      const Rat f = mat[r][col] / mat[rank][col];
      for (int c = col; c < n * m; ++c) mat[r][c] -= f * mat[rank][c];
    }
    ++rank;
  }
  return rank;
}

}  // namespace

TEST_CASE("chain operator matches the stencil") {
  const auto neumann3 = build_chain_operator(3, Flavor::Neumann).dense();
  MatrixXd expected(3, 3);
  expected << -1, 1, 0, 1, -2, 1, 0, 1, -1;
  expected /= 3.0;
  CHECK((neumann3 - expected).cwiseAbs().maxCoeff() == 0.0);

  const auto dirichlet3 = build_chain_operator(3, Flavor::Dirichlet).dense();
  expected << -2, 1, 0, 1, -2, 1, 0, 1, -2;
  expected /= 3.0;
  CHECK((dirichlet3 - expected).cwiseAbs().maxCoeff() == 0.0);

  const auto neumann2 = build_chain_operator(2, Flavor::Neumann).dense();
  MatrixXd expected2(2, 2);
  expected2 << -1, 1, 1, -1;
  expected2 /= 3.0;
  CHECK((neumann2 - expected2).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(build_chain_operator(1, Flavor::Neumann),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_chain_operator(0, Flavor::Dirichlet),
                  std::invalid_argument);
}

TEST_CASE("structure holds exactly for every flavor and size") {
  for (Flavor flavor : {Flavor::Neumann, Flavor::Dirichlet}) {
    for (int n = 2; n <= 64; ++n) {
      const Eigen::MatrixXi m = scaled_dense(n, flavor);
      CHECK(m == m.transpose().eval());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (std::abs(i - j) > 1) CHECK(m(i, j) == 0);
      for (int i = 0; i < n; ++i) {
        const int row_sum = m.row(i).sum();
        const bool boundary = (i == 0 || i == n - 1);
        if (flavor == Flavor::Neumann) CHECK(row_sum == 0);
        else CHECK(row_sum == (boundary ? -1 : 0));
      }
      // the double operator is exactly the integer image divided by 3
      const MatrixXd dense = build_chain_operator(n, flavor).dense();
      CHECK((dense - m.cast<double>() / 3.0).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("eigen decomposition: closed forms and the charpoly oracle") {
  SUBCASE("Neumann has the zero row-sum mode") {
    for (int n : {2, 5, 9, 32}) {
      const auto d = eigen_decompose(build_chain_operator(n, Flavor::Neumann));
      CHECK(std::abs(d.eigenvalues[0]) < 1e-12);
      const VectorXd v = d.eigenvectors.col(0);
      CHECK((v.array() - v[0]).abs().maxCoeff() < 1e-10);
    }
  }

  SUBCASE("N=5 spectra against the closed form and the root finder") {
    const double pi = std::numbers::pi;
    {
      const ChainOperatord op = build_chain_operator(5, Flavor::Neumann);
      const auto d = eigen_decompose(op);
      const auto oracle = charpoly_eigenvalues(op);
      REQUIRE(oracle.size() == 5);
      for (int k = 0; k < 5; ++k) {
        const double closed = -4.0 / 3.0 * std::pow(std::sin(k * pi / 10), 2);
        CHECK(d.eigenvalues[k] == doctest::Approx(closed).epsilon(1e-10));
        CHECK(oracle[k] == doctest::Approx(closed).epsilon(1e-9));
      }
    }
    {
      const ChainOperatord op = build_chain_operator(5, Flavor::Dirichlet);
      const auto d = eigen_decompose(op);
      const auto oracle = charpoly_eigenvalues(op);
      REQUIRE(oracle.size() == 5);
      for (int k = 1; k <= 5; ++k) {
        const double closed = -4.0 / 3.0 * std::pow(std::sin(k * pi / 12), 2);
        CHECK(d.eigenvalues[k - 1] == doctest::Approx(closed).epsilon(1e-10));
        CHECK(oracle[k - 1] == doctest::Approx(closed).epsilon(1e-9));
      }
    }
  }

  SUBCASE("residuals and orthonormality") {
    for (Flavor flavor : {Flavor::Neumann, Flavor::Dirichlet}) {
      const ChainOperatord op = build_chain_operator(12, flavor);
      const auto d = eigen_decompose(op);
      for (int k = 0; k < 12; ++k) {
        const VectorXd v = d.eigenvectors.col(k);
        const VectorXd residual = op.apply(v) - d.eigenvalues[k] * v;
        CHECK(weighted_norm(residual) < 1e-10);
        CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(d.eigenvalues[k] <= 1e-12);
        if (k > 0) CHECK(d.eigenvalues[k] <= d.eigenvalues[k - 1] + 1e-14);
      }
    }
  }
}

TEST_CASE("control layouts") {
  SUBCASE("two boundary agents") {
    const ControlLayout layout = build_two_boundary_layout(5);
    CHECK(layout.active == std::vector<int>{1, 5});
    const MatrixXd b = layout.matrix();
    CHECK(b.rows() == 5);
    CHECK(b.cols() == 2);
    CHECK(b(0, 0) == 1.0);
    CHECK(b(4, 1) == 1.0);
    CHECK(b.sum() == 2.0);
    CHECK_THROWS_AS(build_two_boundary_layout(1), std::invalid_argument);
  }

  SUBCASE("extension block, even and odd") {
    const ControlLayout even = build_extension_block_layout(4);
    CHECK(even.n_agents == 9);  // indexed -2..6
    CHECK(even.index_base == -2);
    CHECK(even.active == std::vector<int>{-1, 0});
    CHECK(even.original_n == 4);

    // odd n keeps the ceil(n/2) width on each side
    const ControlLayout odd = build_extension_block_layout(5);
    CHECK(odd.n_agents == 12);
    CHECK(odd.index_base == -3);
    CHECK(odd.active == std::vector<int>{-2, -1, 0});
  }

  SUBCASE("interior block bounds") {
    CHECK_NOTHROW(build_interior_block_layout(6, 3, 2));
    CHECK_THROWS_AS(build_interior_block_layout(6, 5, 2),
                    std::invalid_argument);  // touches agent 6
    CHECK_THROWS_AS(build_interior_block_layout(6, 1, 2),
                    std::invalid_argument);  // touches agent 1
    CHECK_THROWS_AS(build_interior_block_layout(6, 2, 0),
                    std::invalid_argument);
  }

  SUBCASE("one 1 per active column") {
    for (const ControlLayout& layout :
         {build_two_boundary_layout(7), build_interior_block_layout(9, 4, 3),
          build_extension_block_layout(6)}) {
      const MatrixXd b = layout.matrix();
      for (int c = 0; c < b.cols(); ++c) {
        CHECK(b.col(c).sum() == 1.0);
        CHECK(b.col(c).maxCoeff() == 1.0);
        CHECK(b.col(c).minCoeff() == 0.0);
      }
    }
  }
}

TEST_CASE("kalman rank") {
  SUBCASE("B spans everything when n = 2") {
    const auto r = kalman_rank(build_chain_operator(2, Flavor::Neumann),
                               build_two_boundary_layout(2));
    CHECK(r.rank == 2);
    CHECK(r.satisfied);
  }

  SUBCASE("n=6 Neumann two-boundary against the naive rational oracle") {
    const ChainOperatord op = build_chain_operator(6, Flavor::Neumann);
    const ControlLayout layout = build_two_boundary_layout(6);
    CHECK(rational_kalman_rank(op, layout) == 6);
    const auto r = kalman_rank_exact(op, layout);
    CHECK(r.rank == 6);
    CHECK(r.satisfied);
  }

  SUBCASE("n=6 Dirichlet interior pair against brute-forced eigenvectors") {
    const ChainOperatord op = build_chain_operator(6, Flavor::Dirichlet);
    const ControlLayout layout = build_interior_block_layout(6, 3, 2);
    const auto d = eigen_decompose(op);
    bool any_blind_mode = false;
    for (int k = 0; k < 6; ++k)
      if (std::abs(d.eigenvectors(2, k)) < 1e-12 &&
          std::abs(d.eigenvectors(3, k)) < 1e-12)
        any_blind_mode = true;
    const auto r = kalman_rank(op, layout);
    CHECK(r.satisfied == !any_blind_mode);
    CHECK(r.satisfied);  // no sine mode vanishes on both agents 3 and 4
  }

  SUBCASE("a single central control misses the odd modes") {
    // Neumann eigenvectors are cos(k pi (2j-1)/(2n)); at the center of an
    // odd chain every odd-k mode vanishes.
    const ChainOperatord op = build_chain_operator(5, Flavor::Neumann);
    const ControlLayout layout = build_interior_block_layout(5, 3, 1);
    const auto exact = kalman_rank_exact(op, layout);
    const auto hautus = kalman_rank_hautus(op, layout);
    CHECK(exact.rank == 3);
    CHECK_FALSE(exact.satisfied);
    CHECK(hautus.rank == 3);
    CHECK_FALSE(hautus.satisfied);
    CHECK(rational_kalman_rank(op, layout) == 3);
  }

  SUBCASE("exact and Hautus agree through the exact threshold") {
    for (Flavor flavor : {Flavor::Neumann, Flavor::Dirichlet}) {
      for (int n = 2; n <= kRankExactThreshold; ++n) {
        const ChainOperatord op = build_chain_operator(n, flavor);
        std::vector<ControlLayout> layouts = {build_two_boundary_layout(n)};
        if (n >= 4)
          layouts.push_back(
              build_interior_block_layout(n, 2 + (n - 2) / 3, std::max(1, n / 4)));
        for (const auto& layout : layouts) {
          const auto exact = kalman_rank_exact(op, layout);
          const auto hautus = kalman_rank_hautus(op, layout);
          CAPTURE(n);
          CHECK(exact.rank == hautus.rank);
          CHECK(exact.satisfied == hautus.satisfied);
        }
      }
    }
  }

  SUBCASE("dispatch switches methods at the threshold") {
    const auto small = kalman_rank(build_chain_operator(8, Flavor::Neumann),
                                   build_two_boundary_layout(8));
    CHECK(small.method == RankMethod::ExactRational);
    const auto large = kalman_rank(build_chain_operator(30, Flavor::Neumann),
                                   build_two_boundary_layout(30));
    CHECK(large.method == RankMethod::Hautus);
    CHECK(large.satisfied);
  }
}

TEST_CASE("nonlinearity") {
  SUBCASE("componentwise scaled evaluation") {
    NonlinearitySpec spec = nonlinearity_gauss();
    spec.scaling = Scaling::InverseNSquared;
    const VectorXd ones = VectorXd::Ones(45);
    const VectorXd out = apply_nonlinearity(spec, 45, ones);
    const double expected = std::exp(-1.0) / 2025.0;
    for (int i = 0; i < 45; ++i)
      CHECK(out[i] == doctest::Approx(expected).epsilon(1e-14));

    const VectorXd zero_out = apply_nonlinearity(spec, 45, VectorXd::Zero(45));
    CHECK(zero_out.cwiseAbs().maxCoeff() == 0.0);

    spec.scaling = Scaling::Unscaled;
    VectorXd one(1);
    one << 1.0;
    CHECK(apply_nonlinearity(spec, 45, one)[0] ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  }

  SUBCASE("commutes with permutations") {
    NonlinearitySpec spec = nonlinearity_tanh();
    spec.scaling = Scaling::InverseN;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    VectorXd state(9);
    for (int i = 0; i < 9; ++i) state[i] = dist(rng);
    std::vector<int> perm(9);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const VectorXd direct = apply_nonlinearity(spec, 9, state);
    VectorXd permuted(9);
    for (int i = 0; i < 9; ++i) permuted[i] = state[perm[i]];
    const VectorXd out = apply_nonlinearity(spec, 9, permuted);
    for (int i = 0; i < 9; ++i) CHECK(out[i] == direct[perm[i]]);
  }

  SUBCASE("consensus shift translates the argument") {
    const double pi = std::numbers::pi;
    NonlinearitySpec shifted;
    shifted.g = [](double s) { return std::sin(s); };
    shifted.derivative = [](double s) { return std::cos(s); };
    shifted.consensus_shift = pi;
    shifted.name = "sin";
    CHECK_NOTHROW(validate_nonlinearity(shifted));

    NonlinearitySpec plain = shifted;
    plain.consensus_shift = 0.0;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int i = 0; i < 50; ++i) {
      const double y = dist(rng);
      CHECK(shifted.eval(y) == plain.eval(y + pi));
    }
  }

  SUBCASE("shift must land on a zero of G") {
    NonlinearitySpec bad = nonlinearity_gauss();
    bad.consensus_shift = std::numbers::pi;
    CHECK_THROWS_AS(validate_nonlinearity(bad), std::invalid_argument);
  }

  SUBCASE("lipschitz estimation") {
    const NonlinearitySpec gauss = nonlinearity_gauss();
    CHECK(estimate_lipschitz(gauss, 10.0) == doctest::Approx(1.0).epsilon(1e-4));
    const NonlinearitySpec lin = nonlinearity_linear(2.5);
    CHECK(estimate_lipschitz(lin, 4.0) == doctest::Approx(2.5).epsilon(1e-9));

    // a supplied bound wins; an unknown one is sampled over 10 max|y0|
    CHECK(resolved_lipschitz(gauss, VectorXd::Ones(4)) == 1.0);
    NonlinearitySpec custom;
    custom.g = [](double s) { return std::sin(s); };
    const VectorXd y0 = 0.3 * VectorXd::Ones(4);
    CHECK(resolved_lipschitz(custom, y0) ==
          estimate_lipschitz(custom, 3.0));
  }

  SUBCASE("derivative fallback policy") {
    NonlinearitySpec no_deriv;
    no_deriv.g = [](double s) { return s * std::exp(-s * s); };
    no_deriv.name = "custom";
    CHECK_THROWS_AS(no_deriv.deriv(0.3), std::invalid_argument);
    no_deriv.numeric_derivative_ok = true;
    const double analytic = std::exp(-0.09) * (1.0 - 2.0 * 0.09);
    CHECK(no_deriv.deriv(0.3) == doctest::Approx(analytic).epsilon(1e-8));
  }
}
