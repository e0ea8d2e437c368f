#include "sras/repmap.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sras {

Matrix DifferentiableMap::jacobian_columns(const Vector& x, const Matrix& basis) const {
  if (basis.rows() != input_dim()) {
    fail(ErrorCode::DimMismatch, "family basis rows do not match the map's input dimension");
  }
  Matrix out(output_dim(), basis.cols());
  for (Index j = 0; j < basis.cols(); ++j) out.col(j) = jvp(x, basis.col(j));
  return out;
}

std::string to_string(Activation fn) {
  switch (fn) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
    case Activation::Softplus: return "softplus";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity" || name == "linear") return Activation::Identity;
  if (name == "softplus") return Activation::Softplus;
  fail(ErrorCode::ParseError, "unknown activation '" + name + "'");
}

double activate(Activation fn, double x) {
  switch (fn) {
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Tanh: return std::tanh(x);
    case Activation::Identity: return x;
    case Activation::Softplus: return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  return x;
}

double activate_derivative(Activation fn, double x) {
  switch (fn) {
    case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::Identity: return 1.0;
    case Activation::Softplus:
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return 1.0;
}

LayerSpec LayerSpec::dense(Matrix weight, Vector bias) {
  if (weight.rows() != bias.size()) {
    fail(ErrorCode::DimMismatch, "dense layer bias length does not match weight rows");
  }
  if (weight.rows() < 1 || weight.cols() < 1) fail(ErrorCode::InvalidArgument, "dense layer is empty");
  if (!weight.allFinite() || !bias.allFinite()) {
    fail(ErrorCode::InvalidArgument, "dense layer has non-finite weights");
  }
  LayerSpec spec;
  spec.is_dense_ = true;
  spec.dense_ = DenseLayer{std::move(weight), std::move(bias)};
  return spec;
}

LayerSpec LayerSpec::activation(Activation fn) {
  LayerSpec spec;
  spec.fn_ = fn;
  return spec;
}

RepMap::RepMap(Index input_dim, std::vector<LayerSpec> layers, bool classifier)
    : input_dim_(input_dim), layers_(std::move(layers)), classifier_(classifier) {
  if (input_dim_ < 1) fail(ErrorCode::InvalidArgument, "input dimension must be positive");
  if (layers_.empty()) fail(ErrorCode::InvalidArgument, "a representation map needs at least one layer");
  dims_.reserve(layers_.size() + 1);
  dims_.push_back(input_dim_);
  for (std::size_t n = 0; n < layers_.size(); ++n) {
    const Index incoming = dims_.back();
    if (layers_[n].input_dim(incoming) != incoming) {
      std::ostringstream os;
      os << "layer " << n << " expects input width " << layers_[n].input_dim(incoming) << " but receives "
         << incoming;
      fail(ErrorCode::DimMismatch, os.str());
    }
    dims_.push_back(layers_[n].output_dim(incoming));
  }
  if (classifier_ && dims_.back() < 2) {
    fail(ErrorCode::InvalidArgument, "a classifier head needs at least two outputs");
  }
}

Index RepMap::resolve(std::optional<Index> layer_index) const {
  const Index n = layer_index.value_or(depth());
  if (n < 0 || n > depth()) {
    std::ostringstream os;
    os << "layer index " << n << " outside [0, " << depth() << "]";
    fail(ErrorCode::DimMismatch, os.str());
  }
  return n;
}

void RepMap::check_input(const Vector& x) const {
  if (x.size() != input_dim_) {
    std::ostringstream os;
    os << "input has length " << x.size() << ", expected " << input_dim_;
    fail(ErrorCode::DimMismatch, os.str());
  }
}

Index RepMap::output_dim(std::optional<Index> layer_index) const {
  return dims_[static_cast<std::size_t>(resolve(layer_index))];
}

Vector RepMap::forward(const Vector& x, std::optional<Index> layer_index) const {
  check_input(x);
  const Index stop = resolve(layer_index);
  Vector h = x;
  for (Index n = 0; n < stop; ++n) {
    const LayerSpec& layer = layers_[static_cast<std::size_t>(n)];
    if (layer.is_dense()) {
      h = layer.dense_layer().weight * h + layer.dense_layer().bias;
    } else {
      const Activation fn = layer.activation_fn();
      h = h.unaryExpr([fn](double z) { return activate(fn, z); });
    }
  }
  return h;
}

Vector RepMap::jvp(const Vector& x, const Vector& v, std::optional<Index> layer_index) const {
  check_input(x);
  if (v.size() != input_dim_) fail(ErrorCode::DimMismatch, "tangent length does not match input dimension");
  const Index stop = resolve(layer_index);
  Vector value = x;
  Vector tangent = v;
  for (Index n = 0; n < stop; ++n) {
    const LayerSpec& layer = layers_[static_cast<std::size_t>(n)];
    if (layer.is_dense()) {
      value = layer.dense_layer().weight * value + layer.dense_layer().bias;
      tangent = layer.dense_layer().weight * tangent;
    } else {
      const Activation fn = layer.activation_fn();
      for (Index i = 0; i < value.size(); ++i) {
        tangent(i) *= activate_derivative(fn, value(i));
        value(i) = activate(fn, value(i));
      }
    }
  }
  return tangent;
}

Matrix RepMap::jacobian_columns(const Vector& x, const Matrix& basis, std::optional<Index> layer_index) const {
  if (basis.rows() != input_dim_) {
    fail(ErrorCode::DimMismatch, "family basis rows do not match the map's input dimension");
  }
  Matrix out(output_dim(layer_index), basis.cols());
  for (Index j = 0; j < basis.cols(); ++j) out.col(j) = jvp(x, basis.col(j), layer_index);
  return out;
}

RepMap RepMap::with_output_shift(const Vector& shift) const {
  if (!layers_.back().is_dense()) fail(ErrorCode::InvalidArgument, "final layer is not dense");
  std::vector<LayerSpec> layers = layers_;
  DenseLayer dense = layers.back().dense_layer();
  if (dense.bias.size() != shift.size()) fail(ErrorCode::DimMismatch, "shift length does not match final layer");
  dense.bias += shift;
  layers.back() = LayerSpec::dense(std::move(dense.weight), std::move(dense.bias));
  return RepMap(input_dim_, std::move(layers), classifier_);
}

LayerView::LayerView(const RepMap& map, std::optional<Index> layer_index)
    : map_(&map), layer_(layer_index.value_or(map.depth())) {
  (void)map.output_dim(layer_);
}

double margin(const Vector& logits, Index true_class) {
  if (logits.size() < 2) fail(ErrorCode::InvalidArgument, "margin needs at least two logits");
  if (true_class < 0 || true_class >= logits.size()) {
    std::ostringstream os;
    os << "class index " << true_class << " out of range for " << logits.size() << " logits";
    fail(ErrorCode::InvalidArgument, os.str());
  }
  double runner_up = -std::numeric_limits<double>::infinity();
  for (Index c = 0; c < logits.size(); ++c) {
    if (c != true_class) runner_up = std::max(runner_up, logits(c));
  }
  return logits(true_class) - runner_up;
}

double margin(const DifferentiableMap& map, const Vector& x, Index true_class) {
  return margin(map.value(x), true_class);
}

FixedPointMap::FixedPointMap(Matrix recurrent, DenseLayer drive, Activation fn, SolverConfig solver)
    : recurrent_(std::move(recurrent)), drive_(std::move(drive)), fn_(fn), solver_(solver) {
  if (recurrent_.rows() != recurrent_.cols()) fail(ErrorCode::DimMismatch, "recurrent weight must be square");
  if (drive_.weight.rows() != recurrent_.rows() || drive_.bias.size() != recurrent_.rows()) {
    fail(ErrorCode::DimMismatch, "input drive must map into the recurrent state dimension");
  }
  if (!recurrent_.allFinite() || !drive_.weight.allFinite() || !drive_.bias.allFinite()) {
    fail(ErrorCode::InvalidArgument, "fixed-point map has non-finite weights");
  }
  if (solver_.max_iter < 1 || !(solver_.tol > 0.0) || !(solver_.damping > 0.0) || solver_.damping > 1.0) {
    fail(ErrorCode::InvalidArgument, "invalid solver configuration");
  }
  // sup|sigma'| = 1 for every supported activation.
  const Eigen::JacobiSVD<Matrix> svd(recurrent_);
  contraction_ = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

Vector FixedPointMap::drive_at(const Vector& x) const {
  if (x.size() != input_dim()) fail(ErrorCode::DimMismatch, "input length does not match drive layer");
  return drive_.weight * x + drive_.bias;
}

FixedPointResult FixedPointMap::solve(const Vector& x) const {
  const Vector u = drive_at(x);
  const Activation fn = fn_;
  auto update = [&](const Vector& r) -> Vector {
    return (recurrent_ * r + u).unaryExpr([fn](double z) { return activate(fn, z); });
  };

  Vector r = Vector::Zero(recurrent_.rows());
  Vector g = update(r);
  double residual = (r - g).lpNorm<Eigen::Infinity>();
  double alpha = solver_.damping;
  int iter = 0;
  while (residual > solver_.tol) {
    if (iter >= solver_.max_iter) throw NoConvergence(residual, iter);
    ++iter;
    const Vector next = (1.0 - alpha) * r + alpha * g;
    const Vector next_g = update(next);
    const double next_residual = (next - next_g).lpNorm<Eigen::Infinity>();
    if (next_residual > residual) alpha = std::max(alpha * 0.5, 1.0 / 1024.0);
    r = next;
    g = next_g;
    residual = next_residual;
  }
  return {r, iter, residual};
}

Matrix FixedPointMap::implicit_jacobian(const Vector& x) const {
  const FixedPointResult fp = solve(x);
  const Vector pre = recurrent_ * fp.state + drive_at(x);
  const Vector d = pre.unaryExpr([fn = fn_](double z) { return activate_derivative(fn, z); });
  const Index n = recurrent_.rows();
  const Matrix system = Matrix::Identity(n, n) - d.asDiagonal() * recurrent_;
  const Eigen::PartialPivLU<Matrix> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-12)) {
    std::ostringstream os;
    os << "I - D W is numerically singular (reciprocal condition estimate " << rcond << ")";
    fail(ErrorCode::SingularLinearization, os.str());
  }
  return lu.solve(d.asDiagonal() * drive_.weight);
}

Vector FixedPointMap::jvp(const Vector& x, const Vector& v) const {
  if (v.size() != input_dim()) fail(ErrorCode::DimMismatch, "tangent length does not match input dimension");
  return implicit_jacobian(x) * v;
}

Matrix FixedPointMap::jacobian_columns(const Vector& x, const Matrix& basis) const {
  if (basis.rows() != input_dim()) {
    fail(ErrorCode::DimMismatch, "family basis rows do not match the map's input dimension");
  }
  const Matrix j = implicit_jacobian(x);
  Matrix out(j.rows(), basis.cols());
  for (Index c = 0; c < basis.cols(); ++c) out.col(c) = j * basis.col(c);
  return out;
}

}  // namespace sras
