#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

#include <Eigen/Dense>

#include "sras/repmap.hpp"
#include "sras/spd.hpp"

namespace sras::testing {

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  }
  return m;
}

inline Matrix random_orthogonal(Index k, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(k, k, rng));
  Matrix q = qr.householderQ();
  return q;
}

/// Q diag(exp(u)) Q^T with u uniform in [-spread, spread].
inline SymMatrix random_pd(Index k, std::mt19937_64& rng, double spread = 2.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  const Matrix q = random_orthogonal(k, rng);
  Vector d(k);
  for (Index i = 0; i < k; ++i) d(i) = std::exp(u(rng));
  return SymMatrix(q * d.asDiagonal() * q.transpose());
}

/// G G^T with G k x rank.
inline SymMatrix random_psd(Index k, Index rank, std::mt19937_64& rng) {
  const Matrix g = gaussian(k, rank, rng);
  return SymMatrix(g * g.transpose());
}

inline SymMatrix random_symmetric(Index k, std::mt19937_64& rng) {
  const Matrix g = gaussian(k, k, rng);
  return SymMatrix(0.5 * (g + g.transpose()));
}

inline Vector random_unit(Index k, std::mt19937_64& rng) {
  Vector v = gaussian(k, 1, rng).col(0);
  return v / v.norm();
}

/// dense/activation repeated for each width.
inline RepMap random_net(Index input_dim, const std::vector<Index>& widths, Activation fn, std::mt19937_64& rng,
                         double gain = 1.0) {
  std::vector<LayerSpec> layers;
  Index fan_in = input_dim;
  for (Index w : widths) {
    layers.push_back(LayerSpec::dense(gaussian(w, fan_in, rng, gain / std::sqrt(double(fan_in))),
                                      gaussian(w, 1, rng, 0.1).col(0)));
    layers.push_back(LayerSpec::activation(fn));
    fan_in = w;
  }
  return RepMap(input_dim, std::move(layers));
}

/// Smallest eigenvalue by Eigen's solver, an oracle independent of the Jacobi routine.
inline double min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(m.rows() - 1);
}

inline double rel_err(const Matrix& got, const Matrix& want) {
  const double scale = std::max(want.norm(), 1e-300);
  return (got - want).norm() / scale;
}

/// Code of the sras::Error thrown by f, or nullopt when f returns normally.
template <typename F>
std::optional<ErrorCode> error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace sras::testing
