#include "sras/spd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

namespace sras {

namespace {

void require_same_dim(const SpdMatrix& a, const SpdMatrix& b) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << "matrix dimensions differ (" << a.dim() << " vs " << b.dim() << ")";
    fail(ErrorCode::DimMismatch, os.str());
  }
}

// Rotates columns p, q of m by the plane rotation (c, s).
void rotate_columns(Matrix& m, Index p, Index q, double c, double s) {
  Vector cp = m.col(p);
  m.col(p) = c * cp - s * m.col(q);
  m.col(q) = s * cp + c * m.col(q);
}

void rotate_rows(Matrix& m, Index p, Index q, double c, double s) {
  Eigen::RowVectorXd rp = m.row(p);
  m.row(p) = c * rp - s * m.row(q);
  m.row(q) = s * rp + c * m.row(q);
}

void fix_signs(Matrix& vectors) {
  for (Index j = 0; j < vectors.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < vectors.rows(); ++i) {
      const double mag = std::abs(vectors(i, j));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    if (vectors(arg, j) < 0.0) vectors.col(j) = -vectors.col(j);
  }
}

template <typename F>
Matrix spectral_map(const EigenDecomposition& eig, F&& f) {
  const Vector mapped = eig.values.unaryExpr(f);
  return eig.vectors * mapped.asDiagonal() * eig.vectors.transpose();
}

// Eigenvalues of a lifted matrix sit above tol_pd by construction; the clamp
// only absorbs residual negativity from rounding.
Vector clamped_values(const SpdMatrix& a) {
  const double tol = pd_tolerance(a.sym());
  return a.eigen().values.cwiseMax(tol);
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& entries) {
  if (entries.rows() != entries.cols()) {
    std::ostringstream os;
    os << "symmetric matrix must be square, got " << entries.rows() << "x" << entries.cols();
    fail(ErrorCode::InvalidMatrix, os.str());
  }
  if (entries.rows() < 1) fail(ErrorCode::InvalidMatrix, "symmetric matrix must have k >= 1");
  if (!entries.allFinite()) fail(ErrorCode::InvalidMatrix, "matrix has non-finite entries");
  m_ = 0.5 * (entries + entries.transpose());
}

SymMatrix SymMatrix::identity(Index k) { return SymMatrix(Matrix::Identity(k, k)); }
SymMatrix SymMatrix::zero(Index k) { return SymMatrix(Matrix::Zero(k, k)); }
SymMatrix SymMatrix::diagonal(const Vector& diag) { return SymMatrix(Matrix(diag.asDiagonal())); }
SymMatrix SymMatrix::outer(const Vector& v) { return SymMatrix(v * v.transpose()); }

SymMatrix SymMatrix::operator+(const SymMatrix& other) const {
  if (dim() != other.dim()) fail(ErrorCode::DimMismatch, "cannot add matrices of different size");
  return SymMatrix(m_ + other.m_);
}

SymMatrix SymMatrix::operator-(const SymMatrix& other) const {
  if (dim() != other.dim()) fail(ErrorCode::DimMismatch, "cannot subtract matrices of different size");
  return SymMatrix(m_ - other.m_);
}

SymMatrix SymMatrix::operator*(double s) const { return SymMatrix(m_ * s); }

EigenDecomposition sym_eigendecompose(const SymMatrix& sym) {
  const Index k = sym.dim();
  Matrix a = sym.matrix();
  Matrix v = Matrix::Identity(k, k);
  const double eps = std::numeric_limits<double>::epsilon();
  const double floor = 1e-22 * std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Index p = 0; p < k - 1; ++p) {
      for (Index q = p + 1; q < k; ++q) {
        const double apq = a(p, q);
        const double threshold = std::max(eps * std::sqrt(std::abs(a(p, p) * a(q, q))), floor);
        if (std::abs(apq) <= threshold) continue;
        rotated = true;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        rotate_columns(a, p, q, c, s);
        rotate_rows(a, p, q, c, s);
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        rotate_columns(v, p, q, c, s);
      }
    }
    if (!rotated) break;
  }

  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) < a(j, j); });

  EigenDecomposition out;
  out.values.resize(k);
  out.vectors.resize(k, k);
  for (Index j = 0; j < k; ++j) {
    out.values(j) = a(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(j)]);
    out.vectors.col(j) = v.col(order[static_cast<std::size_t>(j)]);
  }
  fix_signs(out.vectors);
  return out;
}

double pd_tolerance(const SymMatrix& a) { return 1e-12 * a.trace() / static_cast<double>(a.dim()); }

SpdMatrix::SpdMatrix(const SymMatrix& a) : a_(a), eig_(sym_eigendecompose(a)) {
  const double tol = pd_tolerance(a_);
  if (!(a_.trace() > 0.0) || !(eig_.min() > tol)) {
    std::ostringstream os;
    os << "smallest eigenvalue " << eig_.min() << " does not exceed tolerance " << tol;
    fail(ErrorCode::NotPositiveDefinite, os.str());
  }
}

SymMatrix matrix_log(const SpdMatrix& a) {
  EigenDecomposition eig = a.eigen();
  eig.values = clamped_values(a);
  return SymMatrix(spectral_map(eig, [](double x) { return std::log(x); }));
}

SpdMatrix matrix_exp(const SymMatrix& a) {
  const EigenDecomposition eig = sym_eigendecompose(a);
  return SpdMatrix(SymMatrix(spectral_map(eig, [](double x) { return std::exp(x); })));
}

SpdMatrix matrix_sqrt(const SpdMatrix& a) {
  EigenDecomposition eig = a.eigen();
  eig.values = clamped_values(a);
  return SpdMatrix(SymMatrix(spectral_map(eig, [](double x) { return std::sqrt(x); })));
}

SpdMatrix matrix_inv_sqrt(const SpdMatrix& a) {
  EigenDecomposition eig = a.eigen();
  eig.values = clamped_values(a);
  return SpdMatrix(SymMatrix(spectral_map(eig, [](double x) { return 1.0 / std::sqrt(x); })));
}

SpdMatrix spd_lift(const SymMatrix& a, double eps_reg) {
  if (!(eps_reg > 0.0)) fail(ErrorCode::InvalidArgument, "eps_reg must be positive");
  const double trace = a.trace();
  if (!(trace > 0.0)) fail(ErrorCode::ZeroSummary, "cannot lift a summary with non-positive trace");
  const EigenDecomposition eig = sym_eigendecompose(a);
  const double tol = 1e-9 * trace;
  if (eig.min() < -tol) {
    std::ostringstream os;
    os << "summary has eigenvalue " << eig.min() << " below -" << tol;
    fail(ErrorCode::NotPSD, os.str());
  }
  const Index k = a.dim();
  const double shift = eps_reg * trace / static_cast<double>(k);
  return SpdMatrix(SymMatrix(a.matrix() + shift * Matrix::Identity(k, k)));
}

Vector relative_spectrum(const SpdMatrix& a, const SpdMatrix& b) {
  require_same_dim(a, b);
  const Matrix w = matrix_inv_sqrt(a).matrix();
  const SymMatrix m(w * b.matrix() * w);
  return sym_eigendecompose(m).values;
}

double airm_distance(const SpdMatrix& a, const SpdMatrix& b) {
  const Vector lambda = relative_spectrum(a, b);
  double sum = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) {
    const double l = std::log(std::max(lambda(i), std::numeric_limits<double>::min()));
    sum += l * l;
  }
  return std::sqrt(sum);
}

double dinf_distance(const SpdMatrix& a, const SpdMatrix& b) {
  const Vector lambda = relative_spectrum(a, b);
  double worst = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) {
    worst = std::max(worst, std::abs(std::log(std::max(lambda(i), std::numeric_limits<double>::min()))));
  }
  return worst;
}

double log_euclidean_distance(const SpdMatrix& a, const SpdMatrix& b) {
  require_same_dim(a, b);
  return (matrix_log(a).matrix() - matrix_log(b).matrix()).norm();
}

Certificate sras_score(const SpdMatrix& a, const SpdMatrix& b) {
  const Vector lambda = relative_spectrum(a, b);
  double sum = 0.0;
  double worst = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) {
    const double l = std::log(std::max(lambda(i), std::numeric_limits<double>::min()));
    sum += l * l;
    worst = std::max(worst, std::abs(l));
  }
  Certificate cert;
  cert.family_dim = a.dim();
  cert.airm_distance = std::sqrt(sum);
  cert.dinf_distance = worst;
  cert.sras_score = std::exp(-cert.airm_distance / std::sqrt(static_cast<double>(cert.family_dim)));
  return cert;
}

TaskBounds certificate_bounds(const Certificate& cert, double task_value_a) {
  if (!(task_value_a >= 0.0)) fail(ErrorCode::InvalidTaskValue, "task value must be non-negative");
  const double d = cert.airm_distance;
  return {std::exp(-d) * task_value_a, std::exp(d) * task_value_a};
}

VariationalCheck dinf_variational_check(const SpdMatrix& a, const SpdMatrix& b, int trials,
                                        std::uint64_t seed) {
  require_same_dim(a, b);
  const Index k = a.dim();
  const Matrix w = matrix_inv_sqrt(a).matrix();
  const EigenDecomposition rel = sym_eigendecompose(SymMatrix(w * b.matrix() * w));

  auto log_ratio = [&](const Matrix& c) {
    const double ta = (c.cwiseProduct(a.matrix())).sum();
    const double tb = (c.cwiseProduct(b.matrix())).sum();
    return std::abs(std::log(tb / ta));
  };

  VariationalCheck best;
  best.supremum_estimate = -1.0;
  auto consider = [&](const Matrix& c) {
    const double value = log_ratio(c);
    if (value > best.supremum_estimate) {
      best.supremum_estimate = value;
      best.attaining_probe = SymMatrix(c);
    }
  };

  for (Index col : {Index{0}, k - 1}) {
    const Vector direction = w * rel.vectors.col(col);
    consider(direction * direction.transpose());
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<Index> rank_dist(1, k);
  for (int t = 0; t < trials; ++t) {
    const Index rank = rank_dist(rng);
    Matrix g(k, rank);
    for (Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
    consider(g * g.transpose());
  }
  return best;
}

}  // namespace sras
