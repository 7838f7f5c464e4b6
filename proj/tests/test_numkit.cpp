#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "batd/numkit.hpp"
#include "oracles.hpp"

using namespace batd;

namespace {

std::vector<double> sorted_real(const std::vector<ComplexScalar>& z) {
  std::vector<double> r;
  for (auto x : z) r.push_back(x.real());
  std::sort(r.begin(), r.end());
  return r;
}

Matrix random_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
  return a;
}

}  // namespace

TEST(Solve, IdentityReturnsRhs) {
  const Vector b{1.5, -2.0, 3.25};
  EXPECT_EQ(solve_linear(Matrix::identity(3), b), b);
}

TEST(Solve, RandomSystemResidual) {
  const Matrix a = random_matrix(6, 6, 3);
  const Vector b{1, 2, 3, 4, 5, 6};
  const Vector x = solve_linear(a, b);
  const Vector r = a * x;
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(r[i], b[i], 1e-12);
}

TEST(Solve, SingularThrows) {
  EXPECT_THROW(solve_linear(Matrix{{1, 2}, {2, 4}}, Vector{1, 2}), SingularMatrix);
  EXPECT_THROW(solve_linear(Matrix{{1, 2}, {3, 4}}, Vector{1}), DimensionMismatch);
}

TEST(Eigen, DiagonalAndTriangular) {
  EXPECT_EQ(sorted_real(eigenvalues(Matrix{{3, 0}, {0, -1}})), (std::vector<double>{-1, 3}));
  const auto z = sorted_real(eigenvalues(Matrix{{2, 5, 7}, {0, -3, 1}, {0, 0, 0.5}}));
  EXPECT_NEAR(z[0], -3, 1e-12);
  EXPECT_NEAR(z[1], 0.5, 1e-12);
  EXPECT_NEAR(z[2], 2, 1e-12);
}

TEST(Eigen, RotationHasUnitModulusPair) {
  const double t = 0.3;
  const auto z = eigenvalues(Matrix{{std::cos(t), -std::sin(t)}, {std::sin(t), std::cos(t)}});
  ASSERT_EQ(z.size(), 2u);
  for (auto x : z) {
    EXPECT_NEAR(std::abs(x), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(x.imag()), std::sin(t), 1e-14);
  }
  EXPECT_NEAR(spectral_radius(Matrix{{std::cos(t), -std::sin(t)}, {std::sin(t), std::cos(t)}}), 1.0, 1e-14);
}

TEST(Eigen, CompanionRootsRecovered) {
  const std::vector<double> roots{-2.5, -1.0, -0.25, 0.5, 1.75, 3.0};
  const auto z = eigenvalues(oracle::companion(roots));
  ASSERT_EQ(z.size(), roots.size());
  const auto got = sorted_real(z);
  for (std::size_t i = 0; i < roots.size(); ++i) EXPECT_NEAR(got[i], roots[i], 1e-9);
  for (auto x : z) EXPECT_NEAR(x.imag(), 0.0, 1e-9);
}

TEST(Eigen, RandomMatricesSatisfyCharacteristicPolynomial) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t n = 2 + seed % 9;
    const Matrix a = random_matrix(n, n, seed);
    const auto z = eigenvalues(a);
    ASSERT_EQ(z.size(), n);
    double trace = 0.0;
    ComplexScalar sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
    for (auto x : z) {
      sum += x;
      // |det(A - zI)| relative to the product of the scale of each factor.
      const double scale = std::pow(norm_inf(a) + std::abs(x), static_cast<double>(n));
      EXPECT_LT(std::abs(oracle::char_poly(a, x)) / scale, 1e-11) << "seed " << seed;
    }
    EXPECT_NEAR(sum.real(), trace, 1e-10);
    EXPECT_NEAR(sum.imag(), 0.0, 1e-10);
  }
}

TEST(Eigen, HurwitzMarginSign) {
  EXPECT_NEAR(hurwitz_margin(Matrix{{-1, 10}, {0, -2}}), 1.0, 1e-12);
  EXPECT_LT(hurwitz_margin(Matrix{{0.1, 0}, {0, -2}}), 0.0);
}

TEST(Eigen, NonFiniteInputRejected) {
  EXPECT_THROW(eigenvalues(Matrix{{std::nan(""), 0}, {0, 1}}), NoConvergence);
  EXPECT_THROW(eigenvalues(Matrix(2, 3)), DimensionMismatch);
}

TEST(Svd, ReconstructsAndOrdersValues) {
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{5, 3}, {3, 5}, {4, 4}}) {
    const Matrix a = random_matrix(m, n, m * 10 + n);
    const Svd d = svd(a);
    const std::size_t k = std::min(m, n);
    ASSERT_EQ(d.sigma.size(), k);
    for (std::size_t i = 1; i < k; ++i) EXPECT_GE(d.sigma[i - 1], d.sigma[i]);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < k; ++q) s += d.u(i, q) * d.sigma[q] * d.v(j, q);
        EXPECT_NEAR(s, a(i, j), 1e-12);
      }
  }
}

TEST(Svd, KnownValues) {
  const Matrix a{{3, 0}, {0, -4}, {0, 0}};
  EXPECT_NEAR(operator_norm_2(a), 4.0, 1e-14);
  EXPECT_NEAR(smallest_singular_value(a), 3.0, 1e-14);
  EXPECT_NEAR(smallest_singular_value(Matrix{{1, 2}, {2, 4}}), 0.0, 1e-14);
}

TEST(Svd, PseudoInverseOfRankDeficientMatrix) {
  const Matrix a{{1, 2}, {2, 4}};
  const Matrix p = pseudo_inverse(a);
  // Penrose conditions.
  const Matrix apa = a * p * a, pap = p * a * p;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_NEAR(apa(i, j), a(i, j), 1e-13);
      EXPECT_NEAR(pap(i, j), p(i, j), 1e-13);
    }
  // Minimum-norm solution of a consistent system lies along (1, 2).
  const Vector x = solve_min_norm(a, Vector{5, 10});
  EXPECT_NEAR(x[0], 1.0, 1e-13);
  EXPECT_NEAR(x[1], 2.0, 1e-13);
}

TEST(MatrixOps, ArithmeticAndShapes) {
  const Matrix a{{1, 2}, {3, 4}};
  EXPECT_EQ(a * Matrix::identity(2), a);
  EXPECT_EQ(a.transpose(), (Matrix{{1, 3}, {2, 4}}));
  EXPECT_EQ(a + a, a * 2.0);
  EXPECT_EQ((a - a), Matrix(2, 2));
  EXPECT_THROW(a * Matrix(3, 3), DimensionMismatch);
  EXPECT_THROW((Matrix{{1, 2}, {3}}), DimensionMismatch);
  EXPECT_DOUBLE_EQ(norm_inf(a), 7.0);
  EXPECT_DOUBLE_EQ(norm2(Vector{3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(norm2(Vector{3e-200, 4e-200}), 5e-200);
  EXPECT_DOUBLE_EQ(norm2(Vector{3e200, 4e200}), 5e200);
}

TEST(Eigen, TwoStateBehaviorAwareSystem) {
  // G = [[0.2, -2.7], [0.2, -1.175]]: trace -0.975, det 0.305.
  const Matrix g{{0.2, -2.7}, {0.2, -1.175}};
  const double re = -0.975 / 2.0, im = std::sqrt(0.305 - re * re);
  for (auto z : eigenvalues(g)) {
    EXPECT_NEAR(z.real(), re, 1e-12);
    EXPECT_NEAR(std::abs(z.imag()), im, 1e-12);
  }
  EXPECT_NEAR(hurwitz_margin(g), 0.4875, 1e-12);
  EXPECT_NEAR(spectral_radius(Matrix::identity(2) + g), std::hypot(1.0 + re, im), 1e-12);
  EXPECT_EQ(spectral_radius(Matrix(3, 3)), 0.0);
}

TEST(Svd, NilpotentAndRankDeficientAgreeWithSolve) {
  EXPECT_NEAR(operator_norm_2(Matrix{{0, 2}, {0, 0}}), 2.0, 1e-14);
  const Matrix a{{1, 2, 3}, {4, 5, 6}, {5, 7, 9}};
  EXPECT_LT(smallest_singular_value(a), 1e-10);
  EXPECT_THROW(solve_linear(a, Vector{1, 1, 1}), SingularMatrix);
}
