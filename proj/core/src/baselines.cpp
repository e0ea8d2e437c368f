#include "sras/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sras {

namespace {

void require_same_rows(const ActivationMatrix& x, const ActivationMatrix& y) {
  if (x.rows() != y.rows()) {
    std::ostringstream os;
    os << "activation matrices have " << x.rows() << " and " << y.rows() << " rows";
    fail(ErrorCode::DimMismatch, os.str());
  }
}

Matrix double_center(const Matrix& k) {
  const Index n = k.rows();
  const Matrix h = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  return h * k * h;
}

double hsic_cka(const Matrix& kx, const Matrix& ky) {
  const Matrix cx = double_center(kx);
  const Matrix cy = double_center(ky);
  const double xy = cx.cwiseProduct(cy).sum();
  const double xx = cx.cwiseProduct(cx).sum();
  const double yy = cy.cwiseProduct(cy).sum();
  if (!(xx > 0.0) || !(yy > 0.0)) fail(ErrorCode::DegenerateActivations, "kernel has zero centered norm");
  return xy / std::sqrt(xx * yy);
}

// (X^T X / n) with an optional ridge scaled by the mean eigenvalue.
SpdMatrix regularized_covariance(const Matrix& centered, double ridge) {
  const Index m = centered.cols();
  Matrix cov = centered.transpose() * centered / static_cast<double>(centered.rows());
  if (ridge > 0.0) cov += ridge * (cov.trace() / static_cast<double>(m)) * Matrix::Identity(m, m);
  try {
    return SpdMatrix(cov);
  } catch (const Error&) {
    fail(ErrorCode::RankDeficient, "within-set covariance is singular; enable CCA regularization");
  }
}

template <typename Distance>
double mean_pointwise(const std::vector<SpdMatrix>& a, const std::vector<SpdMatrix>& b, Distance&& dist) {
  if (a.size() != b.size()) fail(ErrorCode::DimMismatch, "metric sequences differ in length");
  if (a.empty()) fail(ErrorCode::EmptyDataset, "metric sequences are empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += dist(a[i], b[i]);
  return sum / static_cast<double>(a.size());
}

}  // namespace

ActivationMatrix::ActivationMatrix(Matrix x) : x_(std::move(x)) {
  if (x_.rows() < 2) fail(ErrorCode::InvalidArgument, "activation matrix needs at least two rows");
  if (x_.cols() < 1) fail(ErrorCode::InvalidArgument, "activation matrix has no columns");
  if (!x_.allFinite()) fail(ErrorCode::InvalidArgument, "activation matrix has non-finite entries");
}

Matrix ActivationMatrix::centered() const { return x_.rowwise() - x_.colwise().mean(); }

double linear_cka(const ActivationMatrix& x, const ActivationMatrix& y) {
  require_same_rows(x, y);
  const Matrix xc = x.centered();
  const Matrix yc = y.centered();
  const double xx = (xc.transpose() * xc).norm();
  const double yy = (yc.transpose() * yc).norm();
  if (!(xx > 0.0) || !(yy > 0.0)) fail(ErrorCode::DegenerateActivations, "activations have zero centered norm");
  return (xc.transpose() * yc).squaredNorm() / (xx * yy);
}

Matrix rbf_gram(const Matrix& x, double sigma) {
  if (!(sigma > 0.0)) fail(ErrorCode::DegenerateActivations, "RBF bandwidth must be positive");
  const Index n = x.rows();
  Matrix k(n, n);
  for (Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      const double d2 = (x.row(i) - x.row(j)).squaredNorm();
      k(i, j) = k(j, i) = std::exp(-d2 / (2.0 * sigma * sigma));
    }
  }
  return k;
}

double median_pairwise_distance(const Matrix& x) {
  std::vector<double> d;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = i + 1; j < x.rows(); ++j) d.push_back((x.row(i) - x.row(j)).norm());
  }
  if (d.empty()) return 0.0;
  std::sort(d.begin(), d.end());
  const std::size_t mid = d.size() / 2;
  return d.size() % 2 == 1 ? d[mid] : 0.5 * (d[mid - 1] + d[mid]);
}

double rbf_cka(const ActivationMatrix& x, const ActivationMatrix& y, const RbfBandwidth& bandwidth) {
  require_same_rows(x, y);
  const double sx = bandwidth.fixed_sigma.value_or(median_pairwise_distance(x.matrix()));
  const double sy = bandwidth.fixed_sigma.value_or(median_pairwise_distance(y.matrix()));
  return hsic_cka(rbf_gram(x.matrix(), sx), rbf_gram(y.matrix(), sy));
}

double procrustes_distance(const ActivationMatrix& x, const ActivationMatrix& y) {
  require_same_rows(x, y);
  const Matrix xc = x.centered();
  const Matrix yc = y.centered();
  const double nx = xc.norm();
  const double ny = yc.norm();
  if (!(nx > 0.0) || !(ny > 0.0)) fail(ErrorCode::DegenerateActivations, "activations have zero centered norm");
  // Zero-padding the narrower cloud leaves the optimum unchanged; the nuclear
  // norm of the cross product gives it directly.
  const Matrix cross = (yc / ny).transpose() * (xc / nx);
  const Eigen::JacobiSVD<Matrix> svd(cross);
  const double nuclear = svd.singularValues().sum();
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * nuclear));
}

double cca_r2(const ActivationMatrix& x, const ActivationMatrix& y, double regularization) {
  require_same_rows(x, y);
  if (regularization < 0.0) fail(ErrorCode::InvalidArgument, "CCA regularization must be non-negative");
  const Matrix xc = x.centered();
  const Matrix yc = y.centered();
  const double n = static_cast<double>(x.rows());
  const Matrix wx = matrix_inv_sqrt(regularized_covariance(xc, regularization)).matrix();
  const Matrix wy = matrix_inv_sqrt(regularized_covariance(yc, regularization)).matrix();
  const Matrix cxy = xc.transpose() * yc / n;
  const Eigen::JacobiSVD<Matrix> svd(wx * cxy * wy);
  const Vector rho = svd.singularValues().cwiseMin(1.0);
  return rho.squaredNorm() / static_cast<double>(rho.size());
}

double pw_airm(const std::vector<SpdMatrix>& a, const std::vector<SpdMatrix>& b) {
  return mean_pointwise(a, b, [](const SpdMatrix& p, const SpdMatrix& q) { return airm_distance(p, q); });
}

double msa_spectral_ratio(const SpdMatrix& a, const SpdMatrix& b) {
  const Vector lambda = relative_spectrum(a, b);
  return 1.0 - std::sqrt(lambda(0) / lambda(lambda.size() - 1));
}

double msa_pointwise(const std::vector<SpdMatrix>& a, const std::vector<SpdMatrix>& b) {
  return mean_pointwise(a, b, [](const SpdMatrix& p, const SpdMatrix& q) { return msa_spectral_ratio(p, q); });
}

}  // namespace sras
