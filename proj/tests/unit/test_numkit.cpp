#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "splab/numkit.hpp"

namespace splab {
namespace {

TEST(Matvec, IdentityAndZero) {
  EXPECT_EQ(matvec(Matrix::identity(3), Vector{1, 2, 3}), (Vector{1, 2, 3}));
  EXPECT_EQ(matvec(Matrix(2, 2), Vector{5, 7}), (Vector{0, 0}));
}

TEST(Matvec, HandArithmetic) {
  EXPECT_EQ(matvec(Matrix{{1, 2}, {3, 4}}, Vector{1, 1}), (Vector{3, 7}));
  EXPECT_EQ(matvec_transposed(Matrix{{1, 2}, {3, 4}}, Vector{1, 1}), (Vector{4, 6}));
}

TEST(Matvec, DimensionMismatchThrows) {
  EXPECT_THROW(matvec(Matrix(2, 3), Vector{1, 2}), ContractError);
  EXPECT_THROW(matvec_transposed(Matrix(2, 3), Vector{1, 2, 3}), ContractError);
}

TEST(Matvec, NonFiniteInputThrows) {
  EXPECT_THROW(matvec(Matrix::identity(2), Vector{NAN, 1}), NumericError);
}

TEST(Matvec, DistributesOverAddition) {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix m(50, 50);
    Vector a(50), b(50), sum(50);
    for (double& v : m.span()) v = rng.gaussian();
    for (std::size_t i = 0; i < 50; ++i) {
      a[i] = rng.gaussian();
      b[i] = rng.gaussian();
      sum[i] = a[i] + b[i];
    }
    const Vector lhs = matvec(m, sum);
    const Vector ma = matvec(m, a), mb = matvec(m, b);
    for (std::size_t i = 0; i < 50; ++i) {
      const double rhs = ma[i] + mb[i];
      EXPECT_NEAR(lhs[i], rhs, 1e-12 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST(Gram, Examples) {
  EXPECT_EQ(gram(Matrix::identity(4)), Matrix::identity(4));
  EXPECT_EQ(gram(Matrix(3, 2)), Matrix(2, 2));
  EXPECT_EQ(gram(Matrix{{1, -1}}), (Matrix{{1, -1}, {-1, 1}}));
}

TEST(Gram, OrthonormalColumnsGiveIdentity) {
  const double c = std::cos(0.3), s = std::sin(0.3);
  const Matrix g = gram(Matrix{{c, -s}, {s, c}});
  EXPECT_NEAR(g(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(g(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(g(0, 1), 0.0, 1e-15);
}

TEST(Gram, BitwiseSymmetric) {
  Rng rng(5);
  Matrix m(7, 13);
  for (double& v : m.span()) v = rng.gaussian();
  const Matrix g = gram(m);
  for (std::size_t i = 0; i < 13; ++i)
    for (std::size_t j = 0; j < 13; ++j) EXPECT_EQ(g(i, j), g(j, i));
}

TEST(Matmul, MatchesHandResult) {
  EXPECT_EQ(matmul(Matrix{{1, 2}, {3, 4}}, Matrix{{0, 1}, {1, 0}}), (Matrix{{2, 1}, {4, 3}}));
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), ContractError);
}

TEST(MatrixCtor, LengthMismatchThrows) {
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), ContractError);
}

TEST(FiniteDiff, Examples) {
  const auto sq = [](const Vector& x) { return dot(x.span(), x.span()); };
  const Vector g = finite_diff_grad(sq, Vector{1, 2}, 1e-5);
  EXPECT_NEAR(g[0], 2.0, 1e-8);
  EXPECT_NEAR(g[1], 4.0, 1e-8);

  const Vector zero = finite_diff_grad([](const Vector&) { return 3.0; }, Vector{1, 2, 3}, 1e-4);
  for (double v : zero) EXPECT_EQ(v, 0.0);

  const auto relu0 = [](const Vector& x) { return std::max(x[0], 0.0); };
  const Vector r = finite_diff_grad(relu0, Vector{1.0, 0.5}, 1e-6);
  EXPECT_NEAR(r[0], 1.0, 1e-9);
  EXPECT_NEAR(r[1], 0.0, 1e-12);
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  const auto f = [](const Vector&) { return 0.0; };
  EXPECT_THROW(finite_diff_grad(f, Vector{1}, 0.0), ContractError);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42, 3), b(42, 3);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DistinctStreamsDiffer) {
  Rng a(42, 0), b(42, 1), c(43, 0);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    same_ab += x == b.next_u64();
    same_ac += x == c.next_u64();
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
}

TEST(Rng, SubstreamDoesNotAdvanceParent) {
  Rng a(9);
  const Rng child = a.substream(4);
  Rng fresh(9);
  EXPECT_EQ(a.next_u64(), fresh.next_u64());
  Rng c1 = child, c2 = Rng(9).substream(4);
  EXPECT_EQ(c1.next_u64(), c2.next_u64());
  EXPECT_NE(Rng(9).substream(4).next_u64(), Rng(9).substream(5).next_u64());
}

// Independent reimplementation of the documented generator.
TEST(Rng, MatchesDocumentedConstruction) {
  const auto mix = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  EXPECT_EQ(splitmix_finalize(12345), mix(12345));
  Rng rng(7, 2);
  const std::uint64_t key = mix(7 ^ mix(2 + 0x632BE59BD9B4E019ULL));
  for (std::uint64_t i = 0; i < 4; ++i)
    EXPECT_EQ(rng.next_u64(), mix(key + (i + 1) * 0x9E3779B97F4A7C15ULL));
}

TEST(Rng, UniformMoments) {
  Rng rng(1);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 0.005);
  EXPECT_NEAR(s2 / n, 1.0 / 3.0, 0.005);
}

TEST(Rng, UniformOpenExcludesEndpoints) {
  Rng rng(2);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, GaussianMoments) {
  Rng rng(3);
  double s = 0.0, s2 = 0.0, s4 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    s += g;
    s2 += g * g;
    s4 += g * g * g * g;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
  EXPECT_NEAR(s4 / n, 3.0, 0.1);
}

TEST(Rng, BelowCoversRangeUniformly) {
  Rng rng(4);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, UnitSphereIsUnitAndIsotropic) {
  Rng rng(5);
  Vector mean(3);
  for (int i = 0; i < 20000; ++i) {
    const Vector u = rng.unit_sphere(3);
    ASSERT_NEAR(norm2(u.span()), 1.0, 1e-12);
    for (std::size_t k = 0; k < 3; ++k) mean[k] += u[k] / 20000.0;
  }
  for (double v : mean) EXPECT_NEAR(v, 0.0, 0.02);
}

TEST(DeriveSeed, DistinctLabelsDistinctSeeds) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(17, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(17, 3), derive_seed(17, 3));
}

TEST(Norms, Basics) {
  EXPECT_DOUBLE_EQ(norm2(Vector{3, 4}.span()), 5.0);
  EXPECT_DOUBLE_EQ(squared_norm(Vector{3, 4}.span()), 25.0);
  EXPECT_DOUBLE_EQ(frobenius_sq(Matrix{{1, 2}, {3, 4}}), 30.0);
}

}  // namespace
}  // namespace splab
