#include <gtest/gtest.h>

#include <cmath>

#include "sras/repmap.hpp"
#include "test_support.hpp"

using namespace sras;
using namespace sras::testing;

TEST(Activation, NamesAndDerivatives) {
  for (Activation fn : {Activation::Relu, Activation::Tanh, Activation::Identity, Activation::Softplus}) {
    EXPECT_EQ(activation_from_string(to_string(fn)), fn);
  }
  EXPECT_EQ(activation_from_string("linear"), Activation::Identity);
  EXPECT_THROW(activation_from_string("gelu"), Error);
  EXPECT_EQ(activate_derivative(Activation::Relu, 0.0), 0.0);
  EXPECT_EQ(activate_derivative(Activation::Relu, 1e-300), 1.0);
  EXPECT_NEAR(activate(Activation::Softplus, 800.0), 800.0, 1e-12);
  EXPECT_NEAR(activate(Activation::Softplus, -800.0), 0.0, 1e-300);
}

TEST(RepMap, ForwardExamples) {
  const RepMap id(3, {LayerSpec::dense(Matrix::Identity(3, 3), Vector::Zero(3))});
  const Vector x = Eigen::Vector3d(1.0, -2.0, 0.5);
  EXPECT_EQ(id.forward(x), x);

  Matrix w(2, 2);
  w << 1.0, 0.5, -0.25, 2.0;
  const Vector b = Eigen::Vector2d(0.1, 0.2);
  const RepMap relu(2, {LayerSpec::dense(w, b), LayerSpec::activation(Activation::Relu)});
  const Vector xp = Eigen::Vector2d(1.0, 1.0);
  EXPECT_TRUE(relu.forward(xp).isApprox(w * xp + b));

  Matrix w2(2, 2);
  w2 << 0.3, -1.0, 0.7, 0.2;
  const RepMap two(2, {LayerSpec::dense(w, b), LayerSpec::activation(Activation::Tanh), LayerSpec::dense(w2, b)});
  const Vector manual = w2 * (w * xp + b).array().tanh().matrix() + b;
  EXPECT_LT((two.forward(xp) - manual).norm(), 1e-15);
  EXPECT_LT((two.forward(xp, 2) - (w * xp + b).array().tanh().matrix()).norm(), 1e-15);
  EXPECT_EQ(two.forward(xp, 0), xp);
  EXPECT_THROW(two.forward(Vector::Zero(3)), Error);
  EXPECT_THROW(two.forward(xp, 4), Error);
}

TEST(RepMap, JvpExamples) {
  std::mt19937_64 rng(1);
  const Matrix w = gaussian(4, 3, rng);
  const RepMap lin(3, {LayerSpec::dense(w, Vector::Zero(4))});
  const Vector v = gaussian(3, 1, rng).col(0);
  for (int t = 0; t < 3; ++t) EXPECT_LT((lin.jvp(gaussian(3, 1, rng).col(0), v) - w * v).norm(), 1e-14);

  const RepMap tanh_net(3, {LayerSpec::dense(w, Vector::Zero(4)), LayerSpec::activation(Activation::Tanh)});
  EXPECT_LT((tanh_net.jvp(Vector::Zero(3), v) - w * v).norm(), 1e-14);
}

TEST(RepMap, JvpMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (Activation fn : {Activation::Tanh, Activation::Softplus, Activation::Relu}) {
    const RepMap net = random_net(5, {7, 6, 4}, fn, rng);
    for (int t = 0; t < 100; ++t) {
      const Vector x = gaussian(5, 1, rng).col(0);
      const Vector v = gaussian(5, 1, rng).col(0);
      const double h = 1e-5 * (1.0 + x.cwiseAbs().maxCoeff());
      const Vector fd = (net.forward(x + h * v) - net.forward(x - h * v)) / (2 * h);
      const Vector j = net.jvp(x, v);
      EXPECT_LT((j - fd).norm(), 1e-4 * std::max(j.norm(), 1e-8)) << to_string(fn);
    }
  }
}

TEST(RepMap, JvpIsLinearInTangent) {
  std::mt19937_64 rng(3);
  const RepMap net = random_net(6, {8, 8}, Activation::Tanh, rng);
  for (int t = 0; t < 50; ++t) {
    const Vector x = gaussian(6, 1, rng).col(0);
    const Vector v = gaussian(6, 1, rng).col(0);
    const Vector w = gaussian(6, 1, rng).col(0);
    const Vector lhs = net.jvp(x, 2.5 * v - 0.75 * w);
    const Vector rhs = 2.5 * net.jvp(x, v) - 0.75 * net.jvp(x, w);
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST(RepMap, JacobianColumnsAreJvps) {
  std::mt19937_64 rng(4);
  const Matrix w = gaussian(3, 4, rng);
  const RepMap lin(4, {LayerSpec::dense(w, Vector::Ones(3))});
  EXPECT_LT((lin.jacobian_columns(Vector::Zero(4), Matrix::Identity(4, 4)) - w).norm(), 1e-15);

  const RepMap net = random_net(4, {5, 3}, Activation::Tanh, rng);
  const Matrix p = random_orthogonal(4, rng).leftCols(2);
  const Vector x = gaussian(4, 1, rng).col(0);
  const Matrix jp = net.jacobian_columns(x, p);
  for (Index c = 0; c < 2; ++c) EXPECT_EQ(jp.col(c), net.jvp(x, p.col(c)));
  EXPECT_GE(min_eig(jp.transpose() * jp), -1e-12);
}

TEST(RepMap, OutputShiftLeavesJvpBitIdentical) {
  std::mt19937_64 rng(5);
  std::vector<LayerSpec> layers = random_net(4, {6}, Activation::Tanh, rng).layers();
  layers.push_back(LayerSpec::dense(gaussian(3, 6, rng), Vector::Zero(3)));
  const RepMap base(4, layers);
  const RepMap shifted = base.with_output_shift(Eigen::Vector3d(5.0, -2.0, 1.0));
  const Vector x = gaussian(4, 1, rng).col(0);
  const Vector v = gaussian(4, 1, rng).col(0);
  EXPECT_EQ(base.jvp(x, v), shifted.jvp(x, v));
  EXPECT_NE(base.forward(x), shifted.forward(x));
  const RepMap ends_in_activation = random_net(4, {3}, Activation::Tanh, rng);
  EXPECT_THROW(ends_in_activation.with_output_shift(Vector::Ones(3)), Error);
}

TEST(Margin, Examples) {
  EXPECT_EQ(margin(Vector(Eigen::Vector3d(3.0, 1.0, 0.0)), 0), 2.0);
  EXPECT_EQ(margin(Vector(Eigen::Vector2d(1.0, 1.0)), 0), 0.0);
  const Vector before = Eigen::Vector3d(2.0, 1.5, 0.0);
  const Vector after = Eigen::Vector3d(1.5, 2.0, 0.0);
  EXPECT_DOUBLE_EQ(margin(before, 0) - margin(after, 0), 1.0);
  EXPECT_THROW(margin(before, 3), Error);
  EXPECT_THROW(margin(Vector(Vector::Ones(1)), 0), Error);
}

TEST(FixedPoint, ZeroRecurrenceSolvesInOneStep) {
  std::mt19937_64 rng(6);
  const DenseLayer drive{gaussian(4, 3, rng), gaussian(4, 1, rng).col(0)};
  const FixedPointMap fp(Matrix::Zero(4, 4), drive, Activation::Tanh);
  const Vector x = gaussian(3, 1, rng).col(0);
  const FixedPointResult r = fp.solve(x);
  EXPECT_LT((r.state - (drive.weight * x + drive.bias).array().tanh().matrix()).norm(), 1e-15);
  EXPECT_LE(r.iterations, 2);

  const FixedPointMap lin(Matrix::Zero(4, 4), drive, Activation::Identity);
  EXPECT_LT((lin.implicit_jacobian(x) - drive.weight).norm(), 1e-14);
}

TEST(FixedPoint, LinearClosedFormAndRate) {
  std::mt19937_64 rng(7);
  Matrix w = gaussian(6, 6, rng);
  w *= 0.5 / Eigen::JacobiSVD<Matrix>(w).singularValues()(0);
  const DenseLayer drive{gaussian(6, 2, rng), gaussian(6, 1, rng).col(0)};
  const FixedPointMap fp(w, drive, Activation::Identity);
  EXPECT_NEAR(fp.contraction_estimate(), 0.5, 1e-12);
  EXPECT_TRUE(fp.is_contractive());
  const Vector x = gaussian(2, 1, rng).col(0);
  const FixedPointResult r = fp.solve(x);
  const Matrix iw = Matrix::Identity(6, 6) - w;
  const Vector exact = iw.partialPivLu().solve(drive.weight * x + drive.bias);
  EXPECT_LT((r.state - exact).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE(r.residual, 1e-10);
  EXPECT_LE(r.iterations, 40);
  EXPECT_LT(rel_err(fp.implicit_jacobian(x), iw.partialPivLu().solve(drive.weight)), 1e-12);
}

TEST(FixedPoint, ImplicitJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  SolverConfig cfg;
  cfg.tol = 1e-13;
  cfg.max_iter = 5000;
  for (int s = 0; s < 5; ++s) {
    Matrix w = gaussian(8, 8, rng);
    w *= 0.7 / Eigen::JacobiSVD<Matrix>(w).singularValues()(0);
    const FixedPointMap fp(w, DenseLayer{gaussian(8, 3, rng), gaussian(8, 1, rng).col(0)}, Activation::Tanh, cfg);
    const Vector x = gaussian(3, 1, rng).col(0);
    const Matrix j = fp.implicit_jacobian(x);
    const double h = 1e-5;
    for (Index c = 0; c < 3; ++c) {
      const Vector e = Vector::Unit(3, c);
      const Vector fd = (fp.value(x + h * e) - fp.value(x - h * e)) / (2 * h);
      EXPECT_LT((j.col(c) - fd).norm(), 1e-4 * j.col(c).norm());
      EXPECT_LT((fp.jvp(x, e) - j.col(c)).norm(), 1e-14);
    }
  }
}

TEST(FixedPoint, ReportsNonConvergenceAndSingularity) {
  // sigma(W r + u) with W = 2I and identity activation diverges.
  const DenseLayer drive{Matrix::Identity(2, 2), Vector::Ones(2)};
  SolverConfig cfg;
  cfg.max_iter = 50;
  const FixedPointMap diverging(2.0 * Matrix::Identity(2, 2), drive, Activation::Identity, cfg);
  try {
    diverging.solve(Vector::Zero(2));
    FAIL();
  } catch (const NoConvergence& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoConvergence);
    EXPECT_GT(e.residual(), 0.0);
  }

  // W = I with identity activation: I - W is singular at every point, and
  // r = r + u has a fixed point only for u = 0.
  const FixedPointMap singular(Matrix::Identity(2, 2), DenseLayer{Matrix::Identity(2, 2), Vector::Zero(2)},
                               Activation::Identity);
  try {
    singular.implicit_jacobian(Vector::Zero(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularLinearization);
  }
}
