#pragma once

#include <optional>
#include <vector>

#include "sras/spd.hpp"

namespace sras {

/// n x m activations: rows are stimuli, columns are units.
class ActivationMatrix {
 public:
  explicit ActivationMatrix(Matrix x);

  Index rows() const noexcept { return x_.rows(); }
  Index cols() const noexcept { return x_.cols(); }
  const Matrix& matrix() const noexcept { return x_; }
  /// Column means subtracted.
  Matrix centered() const;

 private:
  Matrix x_;
};

double linear_cka(const ActivationMatrix& x, const ActivationMatrix& y);

/// Bandwidth choice for RBF CKA: the median pairwise distance of each
/// matrix, or a fixed sigma shared by both.
struct RbfBandwidth {
  std::optional<double> fixed_sigma;
};

/// exp(-||x_i - x_j||^2 / (2 sigma^2)) Gram matrix.
Matrix rbf_gram(const Matrix& x, double sigma);
double median_pairwise_distance(const Matrix& x);
double rbf_cka(const ActivationMatrix& x, const ActivationMatrix& y, const RbfBandwidth& bandwidth = {});

/// min over orthogonal Q of || X_c/||X_c|| - Y_c Q/||Y_c|| ||_F.
double procrustes_distance(const ActivationMatrix& x, const ActivationMatrix& y);

/// Default ridge on each within-set covariance, scaled by its mean eigenvalue.
inline constexpr double kDefaultCcaRidge = 1e-6;

/// Mean squared canonical correlation. A ridge of 0 disables regularization
/// and rejects rank-deficient inputs.
double cca_r2(const ActivationMatrix& x, const ActivationMatrix& y, double regularization = kDefaultCcaRidge);

/// Mean of per-image AIRM distances between lifted metrics.
double pw_airm(const std::vector<SpdMatrix>& a, const std::vector<SpdMatrix>& b);

/// 1 - sqrt(lambda_min / lambda_max) of the generalized eigenvalues of (B, A).
double msa_spectral_ratio(const SpdMatrix& a, const SpdMatrix& b);
double msa_pointwise(const std::vector<SpdMatrix>& a, const std::vector<SpdMatrix>& b);

}  // namespace sras
