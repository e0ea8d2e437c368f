#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sras/spd.hpp"
#include "test_support.hpp"

using namespace sras;
using namespace sras::testing;

namespace {

SpdMatrix diag(std::initializer_list<double> d) {
  Vector v(static_cast<Index>(d.size()));
  Index i = 0;
  for (double x : d) v(i++) = x;
  return SpdMatrix(SymMatrix::diagonal(v));
}

}  // namespace

TEST(SymMatrix, SymmetrizesAndRejectsBadInput) {
  Matrix m(2, 2);
  m << 1, 2, 4, 3;
  const SymMatrix s(m);
  EXPECT_EQ(s(0, 1), 3.0);
  EXPECT_EQ(s(1, 0), 3.0);
  EXPECT_THROW(SymMatrix(Matrix(2, 3)), Error);
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    SymMatrix bad(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidMatrix);
  }
}

TEST(Eigen, IdentityAndDiagonal) {
  const EigenDecomposition id = sym_eigendecompose(SymMatrix::identity(3));
  EXPECT_EQ(id.values, Vector::Ones(3));
  EXPECT_NEAR((id.vectors.transpose() * id.vectors - Matrix::Identity(3, 3)).norm(), 0.0, 1e-14);

  const EigenDecomposition d = sym_eigendecompose(SymMatrix::diagonal(Eigen::Vector2d(4.0, 1.0)));
  EXPECT_DOUBLE_EQ(d.values(0), 1.0);
  EXPECT_DOUBLE_EQ(d.values(1), 4.0);
  EXPECT_NEAR(std::abs(d.vectors(1, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(d.vectors(0, 1)), 1.0, 1e-15);
}

TEST(Eigen, ReconstructsRandomMatricesAndMatchesReferenceSolver) {
  std::mt19937_64 rng(1);
  for (Index k : {1, 2, 5, 17, 40}) {
    const SymMatrix a = random_symmetric(k, rng);
    const EigenDecomposition e = sym_eigendecompose(a);
    EXPECT_LT((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - a.matrix()).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((e.vectors.transpose() * e.vectors - Matrix::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-12);
    for (Index i = 1; i < k; ++i) EXPECT_LE(e.values(i - 1), e.values(i));
    Eigen::SelfAdjointEigenSolver<Matrix> ref(a.matrix());
    EXPECT_LT((ref.eigenvalues() - e.values).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, a.max_abs()));
    // Sign convention: the largest-magnitude component of each vector is positive.
    for (Index c = 0; c < k; ++c) {
      Index arg = 0;
      e.vectors.col(c).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(e.vectors(arg, c), 0.0);
    }
  }
}

TEST(Eigen, DeterministicAcrossCalls) {
  std::mt19937_64 rng(2);
  const SymMatrix a = random_symmetric(12, rng);
  const EigenDecomposition e1 = sym_eigendecompose(a);
  const EigenDecomposition e2 = sym_eigendecompose(a);
  EXPECT_EQ(e1.values, e2.values);
  EXPECT_EQ(e1.vectors, e2.vectors);
}

TEST(SpdMatrix, RejectsSingularAndIndefinite) {
  EXPECT_THROW(SpdMatrix(SymMatrix::diagonal(Eigen::Vector2d(1.0, 0.0))), Error);
  EXPECT_THROW(SpdMatrix(SymMatrix::diagonal(Eigen::Vector2d(1.0, -1.0))), Error);
  try {
    SpdMatrix bad(SymMatrix::zero(2));
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
}

TEST(MatrixFunctions, ExamplesAndRoundTrips) {
  EXPECT_EQ(matrix_log(SpdMatrix::identity(3)).max_abs(), 0.0);
  const SpdMatrix s = matrix_sqrt(diag({4.0, 9.0}));
  EXPECT_NEAR(s.matrix()(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(s.matrix()(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(s.matrix()(0, 1), 0.0, 1e-14);

  std::mt19937_64 rng(3);
  for (Index k : {1, 3, 8}) {
    const SpdMatrix a(random_pd(k, rng));
    const Matrix w = matrix_inv_sqrt(a).matrix();
    EXPECT_LT((w * a.matrix() * w - Matrix::Identity(k, k)).norm(), 1e-8);
    const Matrix r = matrix_sqrt(a).matrix();
    EXPECT_LT(rel_err(r * r, a.matrix()), 1e-8);
    EXPECT_LT(rel_err(matrix_exp(matrix_log(a)).matrix(), a.matrix()), 1e-8);
  }
}

TEST(SpdLift, ExamplesAndErrors) {
  const SpdMatrix l = spd_lift(SymMatrix::identity(2), 0.1);
  EXPECT_NEAR((l.matrix() - 1.1 * Matrix::Identity(2, 2)).norm(), 0.0, 1e-15);
  const SpdMatrix l2 = spd_lift(SymMatrix::diagonal(Eigen::Vector2d(2.0, 0.0)), 1e-4);
  EXPECT_DOUBLE_EQ(l2.matrix()(0, 0), 2.0001);
  EXPECT_DOUBLE_EQ(l2.matrix()(1, 1), 0.0001);
  EXPECT_EQ(kDefaultEpsReg, 1e-4);

  try {
    spd_lift(SymMatrix::zero(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroSummary);
  }
  try {
    spd_lift(SymMatrix::diagonal(Eigen::Vector2d(1.0, -0.5)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPSD);
  }
  EXPECT_THROW(spd_lift(SymMatrix::identity(2), 0.0), Error);
}

TEST(SpdLift, StrictlyPdAndScaleEquivariant) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const Index k = 1 + t % 7;
    const SymMatrix a = random_psd(k, 1 + t % k, rng);
    const SpdMatrix l = spd_lift(a);
    EXPECT_GT(min_eig(l.matrix()), 0.0);
    const double c = 0.5 + t;
    EXPECT_LT(rel_err(spd_lift(a * c).matrix(), c * l.matrix()), 1e-14);
  }
}

TEST(Distances, Examples) {
  const SpdMatrix i2 = SpdMatrix::identity(2);
  const SpdMatrix d14 = diag({1.0, 4.0});
  EXPECT_NEAR(airm_distance(i2, d14), std::log(4.0), 1e-12);
  EXPECT_NEAR(airm_distance(i2, d14), 1.386294, 1e-6);
  EXPECT_NEAR(dinf_distance(i2, d14), std::log(4.0), 1e-12);
  for (double c : {0.3, 2.0, 7.0}) {
    const SpdMatrix ci(SymMatrix::identity(3) * c);
    EXPECT_NEAR(airm_distance(SpdMatrix::identity(3), ci), std::sqrt(3.0) * std::abs(std::log(c)), 1e-12);
    EXPECT_NEAR(dinf_distance(SpdMatrix::identity(3), ci), std::abs(std::log(c)), 1e-12);
    EXPECT_NEAR(log_euclidean_distance(SpdMatrix::identity(3), ci), std::sqrt(3.0) * std::abs(std::log(c)), 1e-12);
  }
  const SpdMatrix p = diag({1.0, 2.0});
  const SpdMatrix q = diag({3.0, 5.0});
  EXPECT_NEAR(log_euclidean_distance(p, q), airm_distance(p, q), 1e-10);
  EXPECT_THROW(airm_distance(i2, SpdMatrix::identity(3)), Error);
}

TEST(Distances, MetricProperties) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 40; ++t) {
    const Index k = 1 + t % 6;
    const SpdMatrix a(random_pd(k, rng));
    const SpdMatrix b(random_pd(k, rng));
    EXPECT_NEAR(airm_distance(a, a), 0.0, 1e-10);
    EXPECT_NEAR(airm_distance(a, b), airm_distance(b, a), 1e-10);
    Matrix x = gaussian(k, k, rng) + 2.0 * Matrix::Identity(k, k);
    const SpdMatrix xa(SymMatrix(x * a.matrix() * x.transpose()));
    const SpdMatrix xb(SymMatrix(x * b.matrix() * x.transpose()));
    EXPECT_NEAR(airm_distance(xa, xb), airm_distance(a, b), 1e-8 * std::max(1.0, airm_distance(a, b)));
    const double d = airm_distance(a, b);
    const double di = dinf_distance(a, b);
    EXPECT_LE(di, d + 1e-12);
    EXPECT_LE(d, std::sqrt(double(k)) * di + 1e-12);
  }
}

TEST(Distances, DinfIsTheSmallestSandwichConstant) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 30; ++t) {
    const Index k = 2 + t % 5;
    const SpdMatrix a(random_pd(k, rng));
    const SpdMatrix b(random_pd(k, rng));
    const double d = dinf_distance(a, b);
    const double scale = max_eig(a.matrix());
    auto holds = [&](double s) {
      return min_eig(b.matrix() - std::exp(-s) * a.matrix()) >= -1e-12 * scale &&
             min_eig(std::exp(s) * a.matrix() - b.matrix()) >= -1e-12 * scale;
    };
    EXPECT_TRUE(holds(d));
    EXPECT_FALSE(holds(d * (1 - 1e-6)));
  }
}

TEST(Score, ExamplesAndConsistency) {
  std::mt19937_64 rng(7);
  const SpdMatrix a(random_pd(3, rng));
  EXPECT_NEAR(sras_score(a, a).sras_score, 1.0, 1e-14);
  const SpdMatrix one(SymMatrix::identity(1));
  const SpdMatrix e2(SymMatrix::identity(1) * std::exp(2.0));
  const Certificate c = sras_score(one, e2);
  EXPECT_NEAR(c.airm_distance, 2.0, 1e-14);
  EXPECT_NEAR(c.sras_score, std::exp(-2.0), 1e-14);
  EXPECT_NEAR(c.sras_score, 0.135335, 1e-6);
  const Certificate c2 = sras_score(SpdMatrix::identity(2), diag({1.0, 4.0}));
  EXPECT_NEAR(c2.sras_score, 0.375214, 1e-6);
  EXPECT_EQ(c2.sras_score, std::exp(-c2.airm_distance / std::sqrt(2.0)));
  EXPECT_EQ(c2.family_dim, 2);
}

TEST(Certificate, BoundsExamplesAndContainment) {
  Certificate zero;
  const TaskBounds same = certificate_bounds(zero, 3.0);
  EXPECT_EQ(same.lower, 3.0);
  EXPECT_EQ(same.upper, 3.0);

  const Certificate c = sras_score(diag({2.0}), diag({8.0}));
  EXPECT_NEAR(c.airm_distance, std::log(4.0), 1e-14);
  const TaskBounds b = certificate_bounds(c, 2.0);
  EXPECT_NEAR(b.lower, 0.5, 1e-12);
  // e^{d} * Tr(CA) = 4 * 2; Tr(CB) = 8 sits exactly on the upper edge.
  EXPECT_NEAR(b.upper, 8.0, 1e-12);
  EXPECT_TRUE(8.0 >= b.lower && 8.0 <= b.upper * (1 + 1e-12));
  try {
    certificate_bounds(c, -1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidTaskValue);
  }

  std::mt19937_64 rng(8);
  int inside = 0;
  for (int t = 0; t < 1000; ++t) {
    const SpdMatrix a(random_pd(4, rng));
    const SpdMatrix bm(random_pd(4, rng));
    const Matrix cm = random_psd(4, 1 + t % 4, rng).matrix();
    const TaskBounds tb = certificate_bounds(sras_score(a, bm), (cm * a.matrix()).trace());
    const double v = (cm * bm.matrix()).trace();
    inside += v >= tb.lower * (1 - 1e-12) && v <= tb.upper * (1 + 1e-12);
  }
  EXPECT_EQ(inside, 1000);
}

TEST(Variational, MatchesDinfAndAttains) {
  const VariationalCheck v = dinf_variational_check(SpdMatrix::identity(2), diag({1.0, 4.0}), 20);
  EXPECT_NEAR(v.supremum_estimate, std::log(4.0), 1e-12);
  EXPECT_NEAR(v.attaining_probe(1, 1), 1.0, 1e-12);
  EXPECT_NEAR(v.attaining_probe(0, 0), 0.0, 1e-12);

  const VariationalCheck flat = dinf_variational_check(SpdMatrix::identity(3), SpdMatrix(SymMatrix::identity(3) * 5.0), 5);
  EXPECT_NEAR(flat.supremum_estimate, std::log(5.0), 1e-12);

  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const SpdMatrix a(random_pd(5, rng));
    const SpdMatrix b(random_pd(5, rng));
    const double d = dinf_distance(a, b);
    EXPECT_NEAR(dinf_variational_check(a, b, 50, t).supremum_estimate, d, 1e-8);
    for (int s = 0; s < 50; ++s) {
      const Matrix c = random_psd(5, 1 + s % 5, rng).matrix();
      EXPECT_LE(std::abs(std::log((c * b.matrix()).trace() / (c * a.matrix()).trace())), d + 1e-10);
    }
  }
}
