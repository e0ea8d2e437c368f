#include "sras/summaries.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace sras {

namespace {

constexpr double kOrthonormalTol = 1e-10;

void require_orthonormal(const Matrix& basis, const char* what) {
  const Matrix gram = basis.transpose() * basis;
  const double err = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (!(err <= kOrthonormalTol)) {
    std::ostringstream os;
    os << what << " is not orthonormal (max |P^T P - I| = " << err << ")";
    fail(ErrorCode::InvalidArgument, os.str());
  }
}

// Sums f(i) over rows in fixed chunks, then combines chunk sums pairwise.
template <typename Contribution>
Matrix chunked_sum(Index n, Index k, const Execution& exec, Contribution&& contribution) {
  const Index chunk = std::max<Index>(1, exec.chunk_size);
  const std::size_t n_chunks = static_cast<std::size_t>((n + chunk - 1) / chunk);
  std::vector<Matrix> partial(n_chunks);
  parallel_for(n_chunks, exec.threads, [&](std::size_t c) {
    Matrix acc = Matrix::Zero(k, k);
    const Index begin = static_cast<Index>(c) * chunk;
    const Index end = std::min(n, begin + chunk);
    for (Index i = begin; i < end; ++i) acc += contribution(i);
    partial[c] = std::move(acc);
  });
  return tree_sum(std::move(partial));
}

void require_data(const DifferentiableMap& map, const Dataset& data, const PerturbationFamily& family) {
  if (data.size() == 0) fail(ErrorCode::EmptyDataset, "dataset has no samples");
  if (data.dim() != map.input_dim()) {
    std::ostringstream os;
    os << "dataset has " << data.dim() << " features, map expects " << map.input_dim();
    fail(ErrorCode::DimMismatch, os.str());
  }
  if (family.ambient_dim() != map.input_dim()) {
    std::ostringstream os;
    os << "family ambient dimension " << family.ambient_dim() << " does not match map input " << map.input_dim();
    fail(ErrorCode::DimMismatch, os.str());
  }
}

Matrix pullback_sum(const DifferentiableMap& map, const Dataset& data, const PerturbationFamily& family,
                    const Execution& exec) {
  return chunked_sum(data.size(), family.family_dim(), exec, [&](Index i) -> Matrix {
    const Matrix jp = map.jacobian_columns(data.sample(i), family.basis());
    return jp.transpose() * jp;
  });
}

double psd_slack(const SymMatrix& op) { return 1e-9 * std::abs(op.trace()) + 1e-300; }

}  // namespace

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Random: return "random";
    case FamilyKind::Pca: return "pca";
    case FamilyKind::CoordinateSelection: return "coordinate-selection";
    case FamilyKind::User: return "user";
  }
  return "user";
}

FamilyKind family_kind_from_string(const std::string& name) {
  if (name == "random") return FamilyKind::Random;
  if (name == "pca") return FamilyKind::Pca;
  if (name == "coordinate-selection") return FamilyKind::CoordinateSelection;
  if (name == "user") return FamilyKind::User;
  fail(ErrorCode::ParseError, "unknown family kind '" + name + "'");
}

PerturbationFamily::PerturbationFamily(std::string id, Matrix basis, FamilyKind kind, std::string parent_id)
    : id_(std::move(id)), basis_(std::move(basis)), kind_(kind), parent_id_(std::move(parent_id)) {
  if (basis_.cols() < 1 || basis_.rows() < basis_.cols()) {
    std::ostringstream os;
    os << "family basis must be d x k with 1 <= k <= d, got " << basis_.rows() << "x" << basis_.cols();
    fail(ErrorCode::InvalidArgument, os.str());
  }
  if (!basis_.allFinite()) fail(ErrorCode::InvalidArgument, "family basis has non-finite entries");
  require_orthonormal(basis_, "family basis");
}

PerturbationFamily make_random_family(Index d, Index k_max, std::uint64_t seed) {
  if (k_max < 1 || k_max > d) fail(ErrorCode::InvalidRestriction, "random family needs 1 <= k_max <= d");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(d, k_max);
  for (Index j = 0; j < k_max; ++j) {
    for (Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  }
  const Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, k_max);
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < k_max; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  std::ostringstream id;
  id << "random-d" << d << "-k" << k_max << "-s" << seed;
  return PerturbationFamily(id.str(), std::move(q), FamilyKind::Random);
}

PerturbationFamily restrict_family(const PerturbationFamily& family, Index k) {
  if (k < 1 || k > family.family_dim()) {
    std::ostringstream os;
    os << "cannot restrict a " << family.family_dim() << "-dimensional family to k = " << k;
    fail(ErrorCode::InvalidRestriction, os.str());
  }
  std::ostringstream id;
  id << family.id() << "/k" << k;
  return PerturbationFamily(id.str(), family.basis().leftCols(k), family.kind(), family.id());
}

PerturbationFamily coordinate_family(Index d, const std::vector<Index>& coords) {
  Matrix basis = Matrix::Zero(d, static_cast<Index>(coords.size()));
  std::ostringstream id;
  id << "coords-d" << d;
  for (std::size_t j = 0; j < coords.size(); ++j) {
    if (coords[j] < 0 || coords[j] >= d) fail(ErrorCode::InvalidArgument, "coordinate index out of range");
    basis(coords[j], static_cast<Index>(j)) = 1.0;
    id << (j == 0 ? ":" : ",") << coords[j];
  }
  return PerturbationFamily(id.str(), std::move(basis), FamilyKind::CoordinateSelection);
}

PcaFamily make_pca_family(const Matrix& samples, Index k) {
  const Index n = samples.rows();
  const Index d = samples.cols();
  if (n < 2) fail(ErrorCode::InsufficientData, "PCA family needs at least two samples");
  if (k < 1 || k > d) fail(ErrorCode::InvalidRestriction, "PCA family needs 1 <= k <= d");
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Matrix centered = samples.rowwise() - mean;
  const SymMatrix cov(centered.transpose() * centered / static_cast<double>(n));
  const EigenDecomposition eig = sym_eigendecompose(cov);

  const Vector spectrum = eig.values.reverse();
  const double top = std::max(spectrum(0), 0.0);
  Index rank = 0;
  for (Index i = 0; i < d; ++i) {
    if (spectrum(i) > 1e-10 * top && spectrum(i) > 0.0) ++rank;
  }
  if (k > rank) {
    std::ostringstream os;
    os << "requested " << k << " principal directions but the sample covariance has rank " << rank;
    fail(ErrorCode::RankDeficient, os.str());
  }
  Matrix basis(d, k);
  for (Index j = 0; j < k; ++j) basis.col(j) = eig.vectors.col(d - 1 - j);
  const double total = spectrum.cwiseMax(0.0).sum();

  std::ostringstream id;
  id << "pca-d" << d << "-k" << k << "-n" << n;
  PcaFamily out{PerturbationFamily(id.str(), std::move(basis), FamilyKind::Pca), spectrum,
                spectrum.head(k).sum() / total};
  return out;
}

NoiseModel NoiseModel::isotropic(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorCode::InvalidArgument, "noise sigma must be positive");
  NoiseModel m;
  m.kind_ = NoiseKind::Isotropic;
  m.sigma_ = sigma;
  return m;
}

NoiseModel NoiseModel::full(SpdMatrix covariance) {
  NoiseModel m;
  m.kind_ = NoiseKind::Full;
  m.covariance_ = std::move(covariance);
  return m;
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::None: return "none";
    case NoiseKind::Isotropic: return "isotropic";
    case NoiseKind::Full: return "full";
  }
  return "none";
}

SensitivitySummary::SensitivitySummary(SummaryKind kind, SymMatrix op, Index n_samples, std::string family_id,
                                       NoiseDescriptor noise, std::optional<int> class_label)
    : kind_(kind),
      op_(std::move(op)),
      n_samples_(n_samples),
      family_id_(std::move(family_id)),
      noise_(noise),
      class_label_(class_label) {
  if (n_samples_ < 1) fail(ErrorCode::InvalidArgument, "a summary needs at least one sample");
  const double lowest = sym_eigendecompose(op_).min();
  if (lowest < -psd_slack(op_)) {
    std::ostringstream os;
    os << "summary operator has eigenvalue " << lowest;
    fail(ErrorCode::NotPSD, os.str());
  }
}

SensitivitySummary SensitivitySummary::with_operator(SymMatrix op) const {
  return SensitivitySummary(kind_, std::move(op), n_samples_, family_id_, noise_, class_label_);
}

TaskCovariance::TaskCovariance(SymMatrix c, bool normalized) : c_(std::move(c)), normalized_(normalized) {
  const double lowest = sym_eigendecompose(c_).min();
  if (lowest < -1e-12 * std::max(1.0, std::abs(c_.trace()))) fail(ErrorCode::NotPSD, "task covariance is not PSD");
  if (normalized_ && std::abs(c_.trace() - 1.0) > 1e-12) {
    fail(ErrorCode::InvalidArgument, "normalized task covariance must have unit trace");
  }
}

TaskCovariance TaskCovariance::normalized_from(const SymMatrix& c) {
  const double t = c.trace();
  if (!(t > 0.0)) fail(ErrorCode::ZeroSummary, "cannot normalize a task covariance with zero trace");
  return TaskCovariance(c * (1.0 / t), true);
}

SensitivitySummary accumulate_pullback(const DifferentiableMap& map, const Dataset& data,
                                       const PerturbationFamily& family, const Execution& exec) {
  require_data(map, data, family);
  const Matrix sum = pullback_sum(map, data, family, exec);
  return SensitivitySummary(SummaryKind::Pullback, SymMatrix(sum / static_cast<double>(data.size())), data.size(),
                            family.id());
}

SensitivitySummary accumulate_pullback(const RepMap& map, const Dataset& data, const PerturbationFamily& family,
                                       std::optional<Index> layer_index, const Execution& exec) {
  return accumulate_pullback(LayerView(map, layer_index), data, family, exec);
}

SensitivitySummary accumulate_fisher(const DifferentiableMap& map, const Dataset& data,
                                     const PerturbationFamily& family, const NoiseModel& noise,
                                     const Execution& exec) {
  require_data(map, data, family);
  const double n = static_cast<double>(data.size());
  if (noise.kind() == NoiseKind::Full) {
    const SpdMatrix& sigma = *noise.covariance();
    if (sigma.dim() != map.output_dim()) {
      std::ostringstream os;
      os << "noise covariance is " << sigma.dim() << "x" << sigma.dim() << " but the representation has "
         << map.output_dim() << " units";
      fail(ErrorCode::DimMismatch, os.str());
    }
    const Eigen::LLT<Matrix> chol(sigma.matrix());
    if (chol.info() != Eigen::Success) fail(ErrorCode::NotPositiveDefinite, "noise covariance Cholesky failed");
    const Matrix sum = chunked_sum(data.size(), family.family_dim(), exec, [&](Index i) -> Matrix {
      const Matrix whitened = chol.matrixL().solve(map.jacobian_columns(data.sample(i), family.basis()));
      return whitened.transpose() * whitened;
    });
    return SensitivitySummary(SummaryKind::Fisher, SymMatrix(sum / n), data.size(), family.id(),
                              NoiseDescriptor{NoiseKind::Full, std::nullopt});
  }
  const Matrix sum = pullback_sum(map, data, family, exec);
  const double scale = 1.0 / (noise.sigma() * noise.sigma());
  return SensitivitySummary(SummaryKind::Fisher, SymMatrix(sum / n * scale), data.size(), family.id(),
                            NoiseDescriptor{NoiseKind::Isotropic, noise.sigma()});
}

SensitivitySummary accumulate_fisher(const RepMap& map, const Dataset& data, const PerturbationFamily& family,
                                     const NoiseModel& noise, std::optional<Index> layer_index,
                                     const Execution& exec) {
  return accumulate_fisher(LayerView(map, layer_index), data, family, noise, exec);
}

double task_value(const SymMatrix& op, const SymMatrix& c) {
  if (op.dim() != c.dim()) fail(ErrorCode::DimMismatch, "task covariance and summary differ in dimension");
  return op.matrix().cwiseProduct(c.matrix()).sum();
}

double task_value(const SensitivitySummary& summary, const TaskCovariance& c) {
  return task_value(summary.op(), c.matrix());
}

GainShape gain_shape(const SensitivitySummary& summary) {
  const Index k = summary.dim();
  if (k < 2) fail(ErrorCode::ShapeUndefined, "shape is undefined for k = 1: every nonzero 1x1 operator normalizes to [1]");
  const double t = summary.op().trace();
  if (!(t > 0.0)) fail(ErrorCode::ZeroSummary, "summary has zero trace");
  return {t / static_cast<double>(k), summary.op() * (1.0 / t)};
}

ClassConditional class_conditional_summaries(const DifferentiableMap& map, const Dataset& data,
                                             const PerturbationFamily& family, const std::vector<int>& expected,
                                             const Execution& exec) {
  if (!data.labeled()) fail(ErrorCode::InvalidArgument, "class-conditional summaries need a labeled dataset");
  if (static_cast<Index>(data.labels.size()) != data.size()) {
    fail(ErrorCode::DimMismatch, "label count does not match sample count");
  }
  std::map<int, std::vector<Index>> rows;
  for (Index i = 0; i < data.size(); ++i) rows[data.labels[static_cast<std::size_t>(i)]].push_back(i);

  ClassConditional out;
  for (const auto& [label, idx] : rows) {
    Dataset subset;
    subset.samples.resize(static_cast<Index>(idx.size()), data.dim());
    for (std::size_t r = 0; r < idx.size(); ++r) subset.samples.row(static_cast<Index>(r)) = data.samples.row(idx[r]);
    const SensitivitySummary s = accumulate_pullback(map, subset, family, exec);
    out.per_class.emplace(label, SensitivitySummary(s.kind(), s.op(), s.n_samples(), s.family_id(), s.noise(), label));
  }
  for (int label : expected) {
    if (!rows.contains(label)) out.missing.push_back(label);
  }
  return out;
}

SensitivitySummary pool_summaries(const std::vector<SensitivitySummary>& parts) {
  if (parts.empty()) fail(ErrorCode::EmptyDataset, "nothing to pool");
  const SensitivitySummary& first = parts.front();
  Matrix acc = Matrix::Zero(first.dim(), first.dim());
  Index total = 0;
  for (const auto& p : parts) {
    if (p.family_id() != first.family_id()) fail(ErrorCode::FamilyMismatch, "pooled summaries use different families");
    if (p.dim() != first.dim()) fail(ErrorCode::DimMismatch, "pooled summaries differ in dimension");
    acc += static_cast<double>(p.n_samples()) * p.op().matrix();
    total += p.n_samples();
  }
  return SensitivitySummary(first.kind(), SymMatrix(acc / static_cast<double>(total)), total, first.family_id(),
                            first.noise());
}

SensitivitySummary basis_rotate(const SensitivitySummary& summary, const Matrix& q) {
  const Index k = summary.dim();
  if (q.rows() != k || q.cols() != k) fail(ErrorCode::DimMismatch, "rotation must be k x k");
  require_orthonormal(q, "rotation");
  return SensitivitySummary(summary.kind(), SymMatrix(q.transpose() * summary.op().matrix() * q),
                            summary.n_samples(), summary.family_id() + "/rotated", summary.noise(),
                            summary.class_label());
}

std::vector<SymMatrix> trace_probes(Index k) {
  std::vector<SymMatrix> probes;
  probes.reserve(static_cast<std::size_t>(k * (k + 1) / 2));
  for (Index i = 0; i < k; ++i) probes.push_back(SymMatrix::outer(Vector::Unit(k, i)));
  for (Index i = 0; i < k; ++i) {
    for (Index j = i + 1; j < k; ++j) probes.push_back(SymMatrix::outer(Vector::Unit(k, i) + Vector::Unit(k, j)));
  }
  return probes;
}

SymMatrix reconstruct_from_probes(const std::function<double(const SymMatrix&)>& task, Index k) {
  const std::vector<SymMatrix> probes = trace_probes(k);
  Matrix out(k, k);
  for (Index i = 0; i < k; ++i) out(i, i) = task(probes[static_cast<std::size_t>(i)]);
  std::size_t p = static_cast<std::size_t>(k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = i + 1; j < k; ++j, ++p) {
      out(i, j) = 0.5 * (task(probes[p]) - out(i, i) - out(j, j));
      out(j, i) = out(i, j);
    }
  }
  return SymMatrix(out);
}

}  // namespace sras
