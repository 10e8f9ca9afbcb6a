#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "starspec/eigensolve.hpp"

using namespace starspec;

namespace {

SparseSymMatrix sparse(const Eigen::MatrixXd& d) { return d.sparseView(0.0, 0.0); }

/// Random symmetric A and SPD M (M = B B^T + n I), reproducible by seed.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> random_pair(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(n, n), b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      a(i, j) = nd(gen);
      b(i, j) = nd(gen);
    }
  Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::MatrixXd m = b * b.transpose() / n + Eigen::MatrixXd::Identity(n, n);
  return {sym, m};
}

/// 1D Dirichlet Laplacian on (0, pi) with n interior nodes (P1).
std::pair<SparseSymMatrix, SparseSymMatrix> laplace_1d(int n) {
  const double h = M_PI / (n + 1);
  std::vector<Eigen::Triplet<double>> ka, ma;
  for (int i = 0; i < n; ++i) {
    ka.emplace_back(i, i, 2.0 / h);
    ma.emplace_back(i, i, 4.0 * h / 6.0);
    if (i + 1 < n) {
      ka.emplace_back(i, i + 1, -1.0 / h);
      ka.emplace_back(i + 1, i, -1.0 / h);
      ma.emplace_back(i, i + 1, h / 6.0);
      ma.emplace_back(i + 1, i, h / 6.0);
    }
  }
  SparseSymMatrix k(n, n), m(n, n);
  k.setFromTriplets(ka.begin(), ka.end());
  m.setFromTriplets(ma.begin(), ma.end());
  return {k, m};
}

}  // namespace

TEST_CASE("diagonal pencil") {
  const auto a = sparse(Eigen::Vector3d(1, 2, 3).asDiagonal().toDenseMatrix());
  const auto m = sparse(Eigen::Matrix3d::Identity());
  const auto s = solve_lowest(a, m, 2, 0.0);
  REQUIRE(s.size() == 2);
  CHECK(s.eigenvalues[0] == doctest::Approx(1.0));
  CHECK(s.eigenvalues[1] == doctest::Approx(2.0));
  CHECK(count_below(sparse(Eigen::Vector3d(-5, -1, 2).asDiagonal().toDenseMatrix()), m, 0.0) == 2);
}

TEST_CASE("random pencils match the dense oracle") {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const auto [a, m] = random_pair(50, seed);
    const auto dense = solve_dense(a, m);
    const auto s = solve_lowest(sparse(a), sparse(m), 6, 0.0);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(s.eigenvalues[i] - dense.eigenvalues[i]) < 1e-9);
    const Eigen::MatrixXd g = s.eigenvectors.transpose() * m * s.eigenvectors;
    CHECK((g - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
    for (double t : {-1.0, 0.0, 0.7}) {
      int expected = 0;
      for (double l : dense.eigenvalues) expected += l < t;
      CHECK(count_below(sparse(a), sparse(m), t) == expected);
    }
  }
}

TEST_CASE("large sparse Laplacian: eigenvalues close to j^2") {
  const auto [k, m] = laplace_1d(4000);
  const auto s = solve_lowest(k, m, 5, -1.0);
  for (int j = 0; j < 5; ++j) {
    CHECK(s.eigenvalues[j] == doctest::Approx((j + 1.0) * (j + 1.0)).epsilon(1e-5));
    CHECK(s.residuals[j] <= 1e-9 * std::max(1.0, std::abs(s.eigenvalues[j])));
  }
  CHECK(count_below(k, m, 10.0) == 3);
  CHECK(s.listed_below(10.0) == 3);
  // The plain M^-1-norm residual sits at the rounding floor eps * sqrt(|A|),
  // far above 1e-9 on a fine mesh but still small.
  const auto r = residual_norms(k, m, s.eigenvalues, s.eigenvectors);
  for (double x : r) CHECK(x < 1e-4);
}

TEST_CASE("a shift above some eigenvalues is lowered automatically") {
  const auto [k, m] = laplace_1d(300);
  const auto s = solve_lowest(k, m, 3, 5.0);
  CHECK(s.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(s.shift < 1.0);
}

TEST_CASE("a shift on an eigenvalue is perturbed") {
  const auto a = sparse(Eigen::Vector4d(-3, -1, 2, 5).asDiagonal().toDenseMatrix());
  const auto m = sparse(Eigen::Matrix4d::Identity());
  const auto s = solve_lowest(a, m, 2, -3.0);
  CHECK(s.eigenvalues[0] == doctest::Approx(-3.0));
  CHECK(count_below(a, m, -1.0) == 1);
}

TEST_CASE("Rayleigh quotient") {
  const auto [k, m] = laplace_1d(200);
  const auto s = solve_lowest(k, m, 1, 0.0);
  CHECK(rayleigh(k, m, s.eigenvectors.col(0)) == doctest::Approx(s.eigenvalues[0]).epsilon(1e-12));
  Eigen::VectorXd x = Eigen::VectorXd::Ones(200);
  CHECK(rayleigh(k, m, x) >= s.eigenvalues[0]);
  CHECK_THROWS_AS(rayleigh(k, m, Eigen::VectorXd::Zero(200)), EigensolveError);
}

TEST_CASE("input errors") {
  const auto a = sparse(Eigen::Matrix3d::Identity());
  const auto m2 = sparse(Eigen::Matrix2d::Identity());
  CHECK_THROWS_AS(solve_lowest(a, m2, 1, 0.0), EigensolveError);
  CHECK_THROWS_AS(solve_lowest(a, a, 0, 0.0), EigensolveError);
  CHECK_THROWS_AS(solve_lowest(a, a, 4, 0.0), EigensolveError);
  CHECK_THROWS_AS(solve_lowest(a, sparse(-Eigen::Matrix3d::Identity()), 1, 0.0), EigensolveError);
  CHECK(default_shift(-1.0) == doctest::Approx(-6.0));
}

TEST_CASE("iteration cap reports partial results") {
  const auto [k, m] = laplace_1d(2000);
  SolverOptions opt;
  opt.max_iterations = 1;
  opt.tol = 1e-15;
  try {
    solve_lowest(k, m, 4, -0.5, opt);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.partial().size() == 4);
    CHECK(e.partial().eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-3));
  }
}
