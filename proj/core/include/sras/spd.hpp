#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "sras/error.hpp"

namespace sras {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Regularization of the trace-scaled lift used for layer matching.
inline constexpr double kDefaultEpsReg = 1e-4;
/// Covariance floor used before inverting noise covariances.
inline constexpr double kDefaultEpsSpd = 1e-6;

/// Dense symmetric k x k matrix. Construction symmetrizes via (A + A^T) / 2,
/// so entries(i, j) == entries(j, i) holds bit-exactly afterwards.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& entries);

  static SymMatrix identity(Index k);
  static SymMatrix zero(Index k);
  static SymMatrix diagonal(const Vector& diag);
  /// v v^T
  static SymMatrix outer(const Vector& v);

  Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

  SymMatrix operator+(const SymMatrix& other) const;
  SymMatrix operator-(const SymMatrix& other) const;
  SymMatrix operator*(double s) const;

 private:
  Matrix m_;
};

inline SymMatrix operator*(double s, const SymMatrix& a) { return a * s; }

/// Eigenvalues ascending; eigenvectors are orthonormal columns with their
/// largest-magnitude component positive.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;

  double min() const { return values(0); }
  double max() const { return values(values.size() - 1); }
};

/// Cyclic Jacobi eigendecomposition with a fixed row-by-row sweep order.
EigenDecomposition sym_eigendecompose(const SymMatrix& a);

/// 1e-12 * trace / k
double pd_tolerance(const SymMatrix& a);

/// Strictly positive definite symmetric matrix. The eigendecomposition is
/// computed once at construction and reused by the spectral functions.
class SpdMatrix {
 public:
  explicit SpdMatrix(const SymMatrix& a);
  explicit SpdMatrix(const Matrix& a) : SpdMatrix(SymMatrix(a)) {}

  static SpdMatrix identity(Index k) { return SpdMatrix(SymMatrix::identity(k)); }

  Index dim() const noexcept { return a_.dim(); }
  const SymMatrix& sym() const noexcept { return a_; }
  const Matrix& matrix() const noexcept { return a_.matrix(); }
  const EigenDecomposition& eigen() const noexcept { return eig_; }
  double trace() const { return a_.trace(); }

 private:
  SymMatrix a_;
  EigenDecomposition eig_;
};

SymMatrix matrix_log(const SpdMatrix& a);
SpdMatrix matrix_exp(const SymMatrix& a);
SpdMatrix matrix_sqrt(const SpdMatrix& a);
SpdMatrix matrix_inv_sqrt(const SpdMatrix& a);

/// A + eps_reg * (Tr(A) / k) * I for a PSD summary with positive trace.
SpdMatrix spd_lift(const SymMatrix& a, double eps_reg = kDefaultEpsReg);

/// Eigenvalues of A^{-1/2} B A^{-1/2} (generalized eigenvalues of (B, A)), ascending.
Vector relative_spectrum(const SpdMatrix& a, const SpdMatrix& b);

/// Affine-invariant Riemannian distance ||log(A^{-1/2} B A^{-1/2})||_F.
double airm_distance(const SpdMatrix& a, const SpdMatrix& b);
/// Operator-norm log-spectral distance max_i |log lambda_i(A^{-1/2} B A^{-1/2})|.
double dinf_distance(const SpdMatrix& a, const SpdMatrix& b);
double log_euclidean_distance(const SpdMatrix& a, const SpdMatrix& b);

struct Certificate {
  double airm_distance = 0.0;
  double dinf_distance = 0.0;
  double sras_score = 1.0;
  Index family_dim = 0;
};

/// S = exp(-d_AIRM / sqrt(k)) together with the distances backing it.
Certificate sras_score(const SpdMatrix& a, const SpdMatrix& b);

struct TaskBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Interval (e^{-d} T, e^{d} T) that contains Tr(C B) for every C >= 0 with Tr(C A) = T.
TaskBounds certificate_bounds(const Certificate& cert, double task_value_a);

struct VariationalCheck {
  double supremum_estimate = 0.0;
  SymMatrix attaining_probe = SymMatrix::zero(1);
};

/// Maximizes |log Tr(C B) / Tr(C A)| over `trials` random PSD probes plus the
/// two rank-one probes built from the extreme relative eigenvectors.
VariationalCheck dinf_variational_check(const SpdMatrix& a, const SpdMatrix& b, int trials,
                                        std::uint64_t seed = 0);

}  // namespace sras
