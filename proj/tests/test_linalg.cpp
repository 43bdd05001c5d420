#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rpgcn/linalg.hpp"

using rpgcn::Matrix;

namespace {

Matrix random_symmetric(std::size_t n, std::mt19937_64& gen) {
  auto m = oracle::random_matrix(n, n, gen);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) m(i, j) = m(j, i);
  return m;
}

}  // namespace

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Matrix m{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  EXPECT_EQ(rpgcn::matmul(Matrix::identity(3), m), m);
}

TEST(Matmul, ZerosTimesOnesIsZero) {
  const auto out = rpgcn::matmul(Matrix(2, 3, 0.0), Matrix(3, 2, 1.0));
  EXPECT_EQ(out, Matrix(2, 2, 0.0));
}

TEST(Matmul, MatchesTripleLoop) {
  std::mt19937_64 gen(11);
  const auto a = oracle::random_matrix(4, 4, gen);
  const auto b = oracle::random_matrix(4, 4, gen);
  const auto got = rpgcn::matmul(a, b);
  const auto want = oracle::naive_matmul(a, b);
  for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got.values()[k], want.values()[k], 1e-12);
  const auto at_b = rpgcn::matmul_transpose_a(a, b);
  const auto a_bt = rpgcn::matmul_transpose_b(a, b);
  const auto want_at_b = oracle::naive_matmul(rpgcn::transpose(a), b);
  const auto want_a_bt = oracle::naive_matmul(a, rpgcn::transpose(b));
  for (std::size_t k = 0; k < got.size(); ++k) {
    EXPECT_NEAR(at_b.values()[k], want_at_b.values()[k], 1e-12);
    EXPECT_NEAR(a_bt.values()[k], want_a_bt.values()[k], 1e-12);
  }
}

TEST(Matmul, DimensionMismatchThrows) {
  try {
    rpgcn::matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL();
  } catch (const rpgcn::Error& e) {
    EXPECT_EQ(e.kind(), rpgcn::ErrorKind::DimensionMismatch);
  }
}

TEST(SparseMatrix, MultiplyMatchesDenseAndSumsDuplicates) {
  rpgcn::SparseMatrix s(2, 3, {{1, 2, 4.0}, {0, 0, 1.0}, {0, 0, 1.5}, {1, 0, -1.0}});
  EXPECT_EQ(s.nonzeros(), 3u);
  const Matrix dense{{2.5, 0, 0}, {-1, 0, 4}};
  EXPECT_EQ(s.to_dense(), dense);
  const Matrix rhs{{1, 2}, {3, 4}, {5, 6}};
  EXPECT_EQ(s.multiply(rhs), rpgcn::matmul(dense, rhs));
}

TEST(SymEig, DiagonalMatrix) {
  const Matrix m{{3, 0, 0}, {0, 1, 0}, {0, 0, 2}};
  const auto eig = rpgcn::sym_eig(m);
  ASSERT_EQ(eig.values.size(), 3u);
  EXPECT_DOUBLE_EQ(eig.values[0], 1.0);
  EXPECT_DOUBLE_EQ(eig.values[1], 2.0);
  EXPECT_DOUBLE_EQ(eig.values[2], 3.0);
  EXPECT_DOUBLE_EQ(std::abs(eig.vectors(1, 0)), 1.0);
  EXPECT_DOUBLE_EQ(std::abs(eig.vectors(2, 1)), 1.0);
  EXPECT_DOUBLE_EQ(std::abs(eig.vectors(0, 2)), 1.0);
}

TEST(SymEig, SwapMatrixHasEigenvaluesMinusOneAndOne) {
  const auto eig = rpgcn::sym_eig(Matrix{{0, 1}, {1, 0}});
  EXPECT_NEAR(eig.values[0], -1.0, 1e-14);
  EXPECT_NEAR(eig.values[1], 1.0, 1e-14);
}

TEST(SymEig, ResidualOnRandomSymmetric) {
  std::mt19937_64 gen(5);
  const auto m = random_symmetric(6, gen);
  const auto eig = rpgcn::sym_eig(m);
  for (std::size_t k = 0; k < 6; ++k) {
    if (k > 0) {
      EXPECT_LE(eig.values[k - 1], eig.values[k]);
    }
    for (std::size_t i = 0; i < 6; ++i) {
      double mv = 0.0;
      for (std::size_t j = 0; j < 6; ++j) mv += m(i, j) * eig.vectors(j, k);
      EXPECT_NEAR(mv, eig.values[k] * eig.vectors(i, k), 1e-8);
    }
  }
}

class SymEigProperty : public ::testing::TestWithParam<std::size_t> {};

TEST_P(SymEigProperty, ReconstructsAndIsOrthonormal) {
  const std::size_t n = GetParam();
  std::mt19937_64 gen(1000 + n);
  const auto m = random_symmetric(n, gen);
  const auto eig = rpgcn::sym_eig(m);
  const auto& v = eig.vectors;
  double worst_recon = 0.0;
  double worst_ortho = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double recon = 0.0;
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        recon += v(i, k) * eig.values[k] * v(j, k);
        dot += v(k, i) * v(k, j);
      }
      worst_recon = std::max(worst_recon, std::abs(recon - m(i, j)));
      worst_ortho = std::max(worst_ortho, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  }
  EXPECT_LT(worst_recon, 1e-8);
  EXPECT_LT(worst_ortho, 1e-8);
}

INSTANTIATE_TEST_SUITE_P(Sizes, SymEigProperty, ::testing::Values(1, 2, 3, 7, 16, 31, 50));

TEST(SymEig, RejectsNonSquare) {
  try {
    rpgcn::sym_eig(Matrix(2, 3));
    FAIL();
  } catch (const rpgcn::Error& e) {
    EXPECT_EQ(e.kind(), rpgcn::ErrorKind::NotSquare);
  }
}

TEST(SymEig, RejectsAsymmetric) {
  try {
    rpgcn::sym_eig(Matrix{{1, 2}, {0, 1}});
    FAIL();
  } catch (const rpgcn::Error& e) {
    EXPECT_EQ(e.kind(), rpgcn::ErrorKind::NotSymmetric);
  }
}

TEST(SymEig, ToleratesTinyAsymmetry) {
  const auto eig = rpgcn::sym_eig(Matrix{{2, 1 + 1e-12}, {1, 2}});
  EXPECT_NEAR(eig.values[0], 1.0, 1e-10);
  EXPECT_NEAR(eig.values[1], 3.0, 1e-10);
}

TEST(SymEig, IterationCapIsReported) {
  std::mt19937_64 gen(3);
  rpgcn::JacobiOptions opts;
  opts.max_sweeps = 0;
  try {
    rpgcn::sym_eig(random_symmetric(5, gen), opts);
    FAIL();
  } catch (const rpgcn::Error& e) {
    EXPECT_EQ(e.kind(), rpgcn::ErrorKind::NoConvergence);
    EXPECT_NE(std::string(e.what()).find("0 sweeps"), std::string::npos);
  }
}
