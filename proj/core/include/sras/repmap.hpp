#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sras/spd.hpp"

namespace sras {

/// Anything with an input-to-representation map and exact directional
/// derivatives. Summaries, probes and layer matching only see this surface.
class DifferentiableMap {
 public:
  virtual ~DifferentiableMap() = default;

  virtual Index input_dim() const = 0;
  virtual Index output_dim() const = 0;
  virtual Vector value(const Vector& x) const = 0;
  virtual Vector jvp(const Vector& x, const Vector& v) const = 0;

  /// J(x) P, one JVP per column of `basis`.
  virtual Matrix jacobian_columns(const Vector& x, const Matrix& basis) const;
};

enum class Activation { Relu, Tanh, Identity, Softplus };

std::string to_string(Activation fn);
Activation activation_from_string(const std::string& name);

double activate(Activation fn, double x);
/// Derivative of the activation; relu'(0) is taken as 0.
double activate_derivative(Activation fn, double x);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

struct ActivationLayer {
  Activation fn = Activation::Identity;
};

/// One entry of a feedforward network: either an affine map or an
/// elementwise nonlinearity.
class LayerSpec {
 public:
  static LayerSpec dense(Matrix weight, Vector bias);
  static LayerSpec activation(Activation fn);

  bool is_dense() const noexcept { return is_dense_; }
  const DenseLayer& dense_layer() const { return dense_; }
  Activation activation_fn() const { return fn_; }

  Index input_dim(Index incoming) const { return is_dense_ ? dense_.weight.cols() : incoming; }
  Index output_dim(Index incoming) const { return is_dense_ ? dense_.weight.rows() : incoming; }

 private:
  bool is_dense_ = false;
  DenseLayer dense_;
  Activation fn_ = Activation::Identity;
};

/// Feedforward network x -> f_n(...f_1(x)). Layer index n means "after the
/// first n LayerSpec entries"; 0 is the input itself.
class RepMap {
 public:
  RepMap(Index input_dim, std::vector<LayerSpec> layers, bool classifier = false);

  Index input_dim() const noexcept { return input_dim_; }
  Index depth() const noexcept { return static_cast<Index>(layers_.size()); }
  Index output_dim(std::optional<Index> layer_index = std::nullopt) const;
  bool classifier() const noexcept { return classifier_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }

  Vector forward(const Vector& x, std::optional<Index> layer_index = std::nullopt) const;
  /// Exact J(x) v by propagating value and tangent together.
  Vector jvp(const Vector& x, const Vector& v, std::optional<Index> layer_index = std::nullopt) const;
  Matrix jacobian_columns(const Vector& x, const Matrix& basis,
                          std::optional<Index> layer_index = std::nullopt) const;

  /// Copy with `shift` added to the bias of the final layer, which must be dense.
  RepMap with_output_shift(const Vector& shift) const;

 private:
  Index resolve(std::optional<Index> layer_index) const;
  void check_input(const Vector& x) const;

  Index input_dim_;
  std::vector<LayerSpec> layers_;
  std::vector<Index> dims_;  // dims_[n] = width after n layers
  bool classifier_;
};

/// Non-owning view of a RepMap truncated at a given depth.
class LayerView final : public DifferentiableMap {
 public:
  LayerView(const RepMap& map, std::optional<Index> layer_index = std::nullopt);

  Index input_dim() const override { return map_->input_dim(); }
  Index output_dim() const override { return map_->output_dim(layer_); }
  Vector value(const Vector& x) const override { return map_->forward(x, layer_); }
  Vector jvp(const Vector& x, const Vector& v) const override { return map_->jvp(x, v, layer_); }
  Matrix jacobian_columns(const Vector& x, const Matrix& basis) const override {
    return map_->jacobian_columns(x, basis, layer_);
  }

 private:
  const RepMap* map_;
  Index layer_;
};

/// logit[true_class] - max over other classes.
double margin(const Vector& logits, Index true_class);
double margin(const DifferentiableMap& map, const Vector& x, Index true_class);

struct SolverConfig {
  int max_iter = 1000;
  double tol = 1e-10;
  double damping = 1.0;
};

struct FixedPointResult {
  Vector state;
  int iterations = 0;
  double residual = 0.0;
};

/// Equilibrium map x -> r*(x) with r* = sigma(W r* + u(x)), u(x) = U x + c.
class FixedPointMap final : public DifferentiableMap {
 public:
  FixedPointMap(Matrix recurrent, DenseLayer drive, Activation fn, SolverConfig solver = {});

  const Matrix& recurrent() const noexcept { return recurrent_; }
  const DenseLayer& drive() const noexcept { return drive_; }
  Activation activation() const noexcept { return fn_; }
  const SolverConfig& solver() const noexcept { return solver_; }

  /// ||W||_op * sup|sigma'|; below 1 the Picard iteration is a contraction.
  double contraction_estimate() const noexcept { return contraction_; }
  bool is_contractive() const noexcept { return contraction_ < 1.0; }

  FixedPointResult solve(const Vector& x) const;
  /// (I - D W)^{-1} D U with D = diag(sigma'(W r* + u(x))).
  Matrix implicit_jacobian(const Vector& x) const;

  Index input_dim() const override { return drive_.weight.cols(); }
  Index output_dim() const override { return recurrent_.rows(); }
  Vector value(const Vector& x) const override { return solve(x).state; }
  Vector jvp(const Vector& x, const Vector& v) const override;
  Matrix jacobian_columns(const Vector& x, const Matrix& basis) const override;

 private:
  Vector drive_at(const Vector& x) const;

  Matrix recurrent_;
  DenseLayer drive_;
  Activation fn_;
  SolverConfig solver_;
  double contraction_ = 0.0;
};

}  // namespace sras
