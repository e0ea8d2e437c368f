#include "sras/gridfisher.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "sras/parallel.hpp"

namespace sras {

namespace {

std::string family_name(const ConditionGrid& grid) {
  std::string id = "grid:";
  for (std::size_t a = 0; a < grid.n_axes(); ++a) id += (a ? "," : "") + grid.axis(a).name;
  return id;
}

void require_cells(const ExperimentRecord& record) {
  if (record.n_cells() < 1) fail(ErrorCode::InsufficientData, "record '" + record.id + "' has no cells");
  if (static_cast<Index>(record.conditions.size()) != record.n_trials()) {
    fail(ErrorCode::DimMismatch, "record '" + record.id + "' has mismatched trial bookkeeping");
  }
}

// Fisher-Yates with an explicit uniform draw so streams stay reproducible.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

}  // namespace

ConditionGrid::ConditionGrid(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) fail(ErrorCode::InvalidArgument, "condition grid needs at least one axis");
  n_conditions_ = 1;
  for (const auto& ax : axes_) {
    if (ax.values.empty()) fail(ErrorCode::InvalidArgument, "axis '" + ax.name + "' has no values");
    for (std::size_t i = 1; i < ax.values.size(); ++i) {
      if (!(ax.values[i] > ax.values[i - 1])) {
        fail(ErrorCode::InvalidArgument, "axis '" + ax.name + "' values must be strictly increasing");
      }
    }
    if (ax.kind == AxisKind::Circular) {
      if (!(ax.period > 0.0)) fail(ErrorCode::InvalidArgument, "circular axis '" + ax.name + "' needs a period");
      if (!(ax.values.back() - ax.values.front() < ax.period)) {
        fail(ErrorCode::InvalidArgument, "circular axis '" + ax.name + "' spans more than one period");
      }
    }
    n_conditions_ *= static_cast<Index>(ax.values.size());
  }
}

ConditionGrid ConditionGrid::static_gratings() {
  GridAxis theta{"theta", AxisKind::Circular, {}, std::numbers::pi};
  for (int i = 0; i < 6; ++i) theta.values.push_back(i * std::numbers::pi / 6.0);
  GridAxis rho{"rho", AxisKind::Linear, {}, 0.0};
  for (double sf : {0.02, 0.04, 0.08, 0.16, 0.32}) rho.values.push_back(std::log2(sf));
  GridAxis phi{"phi", AxisKind::Circular, {0.0, 0.25, 0.5, 0.75}, 1.0};
  return ConditionGrid({theta, rho, phi});
}

std::vector<Index> ConditionGrid::coords(Index condition) const {
  if (condition < 0 || condition >= n_conditions_) fail(ErrorCode::InvalidArgument, "condition index out of range");
  std::vector<Index> out(axes_.size());
  for (std::size_t a = axes_.size(); a-- > 0;) {
    const auto n = static_cast<Index>(axes_[a].values.size());
    out[a] = condition % n;
    condition /= n;
  }
  return out;
}

Index ConditionGrid::condition(const std::vector<Index>& coords) const {
  if (coords.size() != axes_.size()) fail(ErrorCode::DimMismatch, "coordinate count does not match grid axes");
  Index c = 0;
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    const auto n = static_cast<Index>(axes_[a].values.size());
    if (coords[a] < 0 || coords[a] >= n) fail(ErrorCode::InvalidArgument, "grid coordinate out of range");
    c = c * n + coords[a];
  }
  return c;
}

Vector ConditionGrid::point(Index condition) const {
  const std::vector<Index> idx = coords(condition);
  Vector p(static_cast<Index>(axes_.size()));
  for (std::size_t a = 0; a < axes_.size(); ++a) p(static_cast<Index>(a)) = axes_[a].values[static_cast<std::size_t>(idx[a])];
  return p;
}

std::size_t ConditionGrid::axis_index(const std::string& name) const {
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    if (axes_[a].name == name) return a;
  }
  fail(ErrorCode::InvalidArgument, "grid has no axis named '" + name + "'");
}

ExperimentRecord ExperimentRecord::select_cells(const std::vector<Index>& cells) const {
  ExperimentRecord out{id, donor, label, conditions, Matrix(n_trials(), static_cast<Index>(cells.size()))};
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c] < 0 || cells[c] >= n_cells()) fail(ErrorCode::InvalidArgument, "cell index out of range");
    out.responses.col(static_cast<Index>(c)) = responses.col(cells[c]);
  }
  return out;
}

ExperimentRecord ExperimentRecord::select_trials(const std::vector<Index>& trials) const {
  ExperimentRecord out{id, donor, label, {}, Matrix(static_cast<Index>(trials.size()), n_cells())};
  out.conditions.reserve(trials.size());
  for (std::size_t t = 0; t < trials.size(); ++t) {
    out.conditions.push_back(conditions.at(static_cast<std::size_t>(trials[t])));
    out.responses.row(static_cast<Index>(t)) = responses.row(trials[t]);
  }
  return out;
}

ConditionMeans condition_means(const ExperimentRecord& record, const ConditionGrid& grid) {
  require_cells(record);
  ConditionMeans out{Matrix::Zero(grid.n_conditions(), record.n_cells()),
                     std::vector<Index>(static_cast<std::size_t>(grid.n_conditions()), 0)};
  for (Index t = 0; t < record.n_trials(); ++t) {
    const Index c = record.conditions[static_cast<std::size_t>(t)];
    if (c < 0 || c >= grid.n_conditions()) fail(ErrorCode::InvalidArgument, "trial references an unknown condition");
    out.means.row(c) += record.responses.row(t);
    ++out.counts[static_cast<std::size_t>(c)];
  }
  bool any = false;
  for (Index c = 0; c < grid.n_conditions(); ++c) {
    const Index n = out.counts[static_cast<std::size_t>(c)];
    if (n > 0) {
      out.means.row(c) /= static_cast<double>(n);
      any = true;
    }
  }
  if (!any) fail(ErrorCode::InsufficientData, "record '" + record.id + "' has no trials on the grid");
  return out;
}

LedoitWolf ledoit_wolf(const Matrix& samples) {
  const Index n = samples.rows();
  const Index p = samples.cols();
  if (n < 1 || p < 1) fail(ErrorCode::InsufficientData, "Ledoit-Wolf needs samples");
  const Matrix x = samples.rowwise() - samples.colwise().mean();
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);
  const Matrix s = x.transpose() * x / nd;
  const double mu = s.trace() / pd;
  const Matrix x2 = x.cwiseAbs2();
  const double beta_sum = (x2.transpose() * x2).sum();
  const double delta_sum = s.cwiseAbs2().sum();
  double beta = (beta_sum / nd - delta_sum) / (pd * nd);
  const double delta = (delta_sum - 2.0 * mu * s.trace() + pd * mu * mu) / pd;
  LedoitWolf out;
  if (!(delta > 0.0)) {
    out.shrinkage = 1.0;
  } else {
    beta = std::clamp(beta, 0.0, delta);
    out.shrinkage = beta / delta;
  }
  out.covariance = (1.0 - out.shrinkage) * s + out.shrinkage * mu * Matrix::Identity(p, p);
  return out;
}

SpdMatrix regularize_covariance(const Matrix& s, double eps_spd) {
  if (!(eps_spd > 0.0)) fail(ErrorCode::InvalidArgument, "eps_spd must be positive");
  const SymMatrix shifted(s + eps_spd * Matrix::Identity(s.rows(), s.cols()));
  EigenDecomposition eig = sym_eigendecompose(shifted);
  eig.values = eig.values.cwiseMax(eps_spd);
  return SpdMatrix(SymMatrix(eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose()));
}

PooledCovariance pooled_shrinkage_covariance(const ExperimentRecord& record, const ConditionGrid& grid,
                                             const ConditionMeans& means, double eps_spd) {
  require_cells(record);
  if (means.means.cols() != record.n_cells() || means.means.rows() != grid.n_conditions()) {
    fail(ErrorCode::DimMismatch, "condition means do not match the record");
  }
  if (record.n_trials() < 2) fail(ErrorCode::InsufficientData, "pooled covariance needs at least two residuals");
  Matrix residuals(record.n_trials(), record.n_cells());
  for (Index t = 0; t < record.n_trials(); ++t) {
    residuals.row(t) = record.responses.row(t) - means.means.row(record.conditions[static_cast<std::size_t>(t)]);
  }
  const LedoitWolf lw = ledoit_wolf(residuals);
  return {regularize_covariance(lw.covariance, eps_spd), lw.shrinkage, record.n_trials()};
}

std::optional<Matrix> finite_difference_jacobian(const ConditionMeans& means, const ConditionGrid& grid,
                                                 Index condition) {
  const std::vector<Index> at = grid.coords(condition);
  if (!means.present(condition)) return std::nullopt;
  Matrix jac(means.means.cols(), static_cast<Index>(grid.n_axes()));
  for (std::size_t a = 0; a < grid.n_axes(); ++a) {
    const GridAxis& ax = grid.axis(a);
    const auto n = static_cast<Index>(ax.values.size());
    const Index i = at[a];
    Index prev = i - 1;
    Index next = i + 1;
    double step = 0.0;
    if (ax.kind == AxisKind::Circular) {
      if (n < 2) fail(ErrorCode::GridTooSmall, "circular axis '" + ax.name + "' needs at least 2 values");
      prev = (prev + n) % n;
      next = next % n;
      step = std::fmod(ax.values[static_cast<std::size_t>(next)] - ax.values[static_cast<std::size_t>(prev)], ax.period);
      if (step <= 0.0) step += ax.period;
    } else {
      if (n < 3) fail(ErrorCode::GridTooSmall, "linear axis '" + ax.name + "' needs at least 3 values");
      if (prev < 0 || next >= n) return std::nullopt;
      step = ax.values[static_cast<std::size_t>(next)] - ax.values[static_cast<std::size_t>(prev)];
    }
    std::vector<Index> lo = at;
    std::vector<Index> hi = at;
    lo[a] = prev;
    hi[a] = next;
    const Index c_lo = grid.condition(lo);
    const Index c_hi = grid.condition(hi);
    if (!means.present(c_lo) || !means.present(c_hi)) return std::nullopt;
    jac.col(static_cast<Index>(a)) = (means.means.row(c_hi) - means.means.row(c_lo)).transpose() / step;
  }
  return jac;
}

std::string to_string(GridMode mode) { return mode == GridMode::Fisher ? "fisher" : "naive"; }

GridMode grid_mode_from_string(const std::string& name) {
  if (name == "fisher") return GridMode::Fisher;
  if (name == "naive") return GridMode::Naive;
  fail(ErrorCode::ParseError, "unknown grid mode '" + name + "'");
}

SensitivitySummary operator_from_means(const ConditionMeans& means, const ConditionGrid& grid,
                                       const std::optional<NoiseModel>& noise) {
  const Index q = static_cast<Index>(grid.n_axes());
  std::optional<Eigen::LLT<Matrix>> chol;
  double scale = 1.0;
  NoiseDescriptor descriptor;
  if (noise) {
    if (noise->kind() == NoiseKind::Full) {
      if (noise->covariance()->dim() != means.means.cols()) {
        fail(ErrorCode::DimMismatch, "noise covariance does not match the number of cells");
      }
      chol.emplace(noise->covariance()->matrix());
      descriptor = {NoiseKind::Full, std::nullopt};
    } else {
      scale = 1.0 / (noise->sigma() * noise->sigma());
      descriptor = {NoiseKind::Isotropic, noise->sigma()};
    }
  }
  Matrix acc = Matrix::Zero(q, q);
  Index valid = 0;
  for (Index c = 0; c < grid.n_conditions(); ++c) {
    const std::optional<Matrix> jac = finite_difference_jacobian(means, grid, c);
    if (!jac) continue;
    ++valid;
    if (chol) {
      const Matrix w = chol->matrixL().solve(*jac);
      acc += w.transpose() * w;
    } else {
      acc += jac->transpose() * *jac;
    }
  }
  if (valid == 0) fail(ErrorCode::InsufficientData, "no grid point has a complete finite-difference stencil");
  acc *= scale / static_cast<double>(valid);
  return SensitivitySummary(noise ? SummaryKind::Fisher : SummaryKind::Pullback, SymMatrix(acc), valid,
                            family_name(grid), descriptor);
}

SensitivitySummary experiment_operators(const ExperimentRecord& record, const ConditionGrid& grid, GridMode mode,
                                        double eps_spd) {
  const ConditionMeans means = condition_means(record, grid);
  if (mode == GridMode::Naive) return operator_from_means(means, grid, std::nullopt);
  const PooledCovariance cov = pooled_shrinkage_covariance(record, grid, means, eps_spd);
  return operator_from_means(means, grid, NoiseModel::full(cov.sigma));
}

SensitivitySummary family_restriction(const SensitivitySummary& op, const std::vector<Index>& axes, bool shape_only) {
  if (axes.empty()) fail(ErrorCode::InvalidArgument, "coordinate family must be non-empty");
  if (shape_only && axes.size() < 2) {
    fail(ErrorCode::ShapeUndefined, "one-dimensional shape-only families are undefined");
  }
  const auto q = static_cast<Index>(axes.size());
  Matrix sub(q, q);
  for (Index i = 0; i < q; ++i) {
    for (Index j = 0; j < q; ++j) {
      const Index a = axes[static_cast<std::size_t>(i)];
      const Index b = axes[static_cast<std::size_t>(j)];
      if (a < 0 || a >= op.dim() || b < 0 || b >= op.dim()) fail(ErrorCode::InvalidArgument, "axis index out of range");
      sub(i, j) = op.op()(a, b);
    }
  }
  if (shape_only) {
    const double t = sub.trace();
    if (!(t > 0.0)) fail(ErrorCode::ZeroSummary, "restricted operator has zero trace");
    sub /= t;
  }
  std::ostringstream id;
  id << op.family_id() << "|Q=";
  for (std::size_t i = 0; i < axes.size(); ++i) id << (i ? "," : "") << axes[i];
  if (shape_only) id << "|shape";
  return SensitivitySummary(op.kind(), SymMatrix(sub), op.n_samples(), id.str(), op.noise(), op.class_label());
}

std::vector<Index> parse_axis_family(const ConditionGrid& grid, const std::string& names) {
  std::vector<Index> out;
  std::stringstream ss(names);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    out.push_back(static_cast<Index>(grid.axis_index(name)));
  }
  if (out.empty()) fail(ErrorCode::InvalidArgument, "empty coordinate family");
  return out;
}

SensitivitySummary matched_subsample_operators(const ExperimentRecord& record, const ConditionGrid& grid,
                                               const SubsampleConfig& config) {
  if (config.n_match < 1 || config.n_subsamples < 1) fail(ErrorCode::InvalidArgument, "invalid subsample configuration");
  if (record.n_cells() < config.n_match) {
    std::ostringstream os;
    os << "record '" << record.id << "' has " << record.n_cells() << " cells, fewer than " << config.n_match;
    fail(ErrorCode::InsufficientData, os.str());
  }
  // Subsets are drawn serially so they do not depend on the thread count.
  std::mt19937_64 rng(config.seed);
  std::vector<std::vector<Index>> subsets;
  for (Index s = 0; s < config.n_subsamples; ++s) {
    std::vector<Index> cells(static_cast<std::size_t>(record.n_cells()));
    std::iota(cells.begin(), cells.end(), Index{0});
    seeded_shuffle(cells, rng);
    cells.resize(static_cast<std::size_t>(config.n_match));
    std::sort(cells.begin(), cells.end());
    subsets.push_back(std::move(cells));
  }
  std::vector<Matrix> ops(subsets.size());
  std::vector<std::optional<SensitivitySummary>> summaries(subsets.size());
  parallel_for(subsets.size(), config.threads, [&](std::size_t s) {
    summaries[s] = experiment_operators(record.select_cells(subsets[s]), grid, config.mode, config.eps_spd);
    ops[s] = summaries[s]->op().matrix();
  });
  const Matrix mean = tree_sum(std::move(ops)) / static_cast<double>(subsets.size());
  return summaries.front()->with_operator(SymMatrix(mean));
}

double split_half_reliability(const ExperimentRecord& record, const ConditionGrid& grid,
                              const SplitHalfConfig& config, const OperatorSimilarity& comparator) {
  if (config.n_repeats < 1) fail(ErrorCode::InvalidArgument, "split-half needs at least one repeat");
  const OperatorSimilarity compare = comparator ? comparator : sras_similarity(config.eps_reg);
  std::vector<std::vector<Index>> by_condition(static_cast<std::size_t>(grid.n_conditions()));
  for (Index t = 0; t < record.n_trials(); ++t) {
    by_condition.at(static_cast<std::size_t>(record.conditions[static_cast<std::size_t>(t)])).push_back(t);
  }
  bool any = false;
  for (const auto& trials : by_condition) any = any || trials.size() >= 2;
  if (!any) fail(ErrorCode::InsufficientData, "split-half needs conditions with at least two trials");

  std::mt19937_64 rng(config.seed);
  double total = 0.0;
  for (Index r = 0; r < config.n_repeats; ++r) {
    std::vector<Index> first;
    std::vector<Index> second;
    for (auto trials : by_condition) {
      if (trials.size() < 2) continue;
      seeded_shuffle(trials, rng);
      const std::size_t half = trials.size() / 2;
      first.insert(first.end(), trials.begin(), trials.begin() + static_cast<std::ptrdiff_t>(half));
      second.insert(second.end(), trials.begin() + static_cast<std::ptrdiff_t>(half), trials.end());
    }
    const SensitivitySummary a = experiment_operators(record.select_trials(first), grid, config.mode, config.eps_spd);
    const SensitivitySummary b = experiment_operators(record.select_trials(second), grid, config.mode, config.eps_spd);
    total += compare(a.op(), b.op());
  }
  return total / static_cast<double>(config.n_repeats);
}

}  // namespace sras
