#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sras/parallel.hpp"
#include "sras/repmap.hpp"
#include "sras/spd.hpp"

namespace sras {

/// Samples as rows; labels are either empty or one per row.
struct Dataset {
  Matrix samples;
  std::vector<int> labels;

  Index size() const noexcept { return samples.rows(); }
  Index dim() const noexcept { return samples.cols(); }
  bool labeled() const noexcept { return !labels.empty(); }
  Vector sample(Index i) const { return samples.row(i).transpose(); }
};

enum class FamilyKind { Random, Pca, CoordinateSelection, User };

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& name);

/// Orthonormal d x k basis spanning the admissible perturbations.
class PerturbationFamily {
 public:
  PerturbationFamily(std::string id, Matrix basis, FamilyKind kind = FamilyKind::User,
                     std::string parent_id = {});

  const std::string& id() const noexcept { return id_; }
  const std::string& parent_id() const noexcept { return parent_id_; }
  FamilyKind kind() const noexcept { return kind_; }
  Index ambient_dim() const noexcept { return basis_.rows(); }
  Index family_dim() const noexcept { return basis_.cols(); }
  const Matrix& basis() const noexcept { return basis_; }

 private:
  std::string id_;
  Matrix basis_;
  FamilyKind kind_;
  std::string parent_id_;
};

/// Seeded Gaussian matrix orthonormalized by QR with diag(R) > 0.
PerturbationFamily make_random_family(Index d, Index k_max, std::uint64_t seed);
/// Leading k columns of `family`, copied bit-exactly.
PerturbationFamily restrict_family(const PerturbationFamily& family, Index k);
/// Selects the listed input coordinates.
PerturbationFamily coordinate_family(Index d, const std::vector<Index>& coords);

struct PcaFamily {
  PerturbationFamily family;
  Vector spectrum;  // all covariance eigenvalues, descending
  double explained_variance = 0.0;
};

/// Top-k principal directions of the (1/n) sample covariance.
PcaFamily make_pca_family(const Matrix& samples, Index k);

enum class NoiseKind { None, Isotropic, Full };

class NoiseModel {
 public:
  static NoiseModel isotropic(double sigma);
  static NoiseModel full(SpdMatrix covariance);

  NoiseKind kind() const noexcept { return kind_; }
  double sigma() const noexcept { return sigma_; }
  const std::optional<SpdMatrix>& covariance() const noexcept { return covariance_; }

 private:
  NoiseModel() = default;
  NoiseKind kind_ = NoiseKind::Isotropic;
  double sigma_ = 1.0;
  std::optional<SpdMatrix> covariance_;
};

std::string to_string(NoiseKind kind);

struct NoiseDescriptor {
  NoiseKind kind = NoiseKind::None;
  std::optional<double> sigma;
};

enum class SummaryKind { Pullback, Fisher };

/// PSD k x k operator with the provenance needed to compare it.
class SensitivitySummary {
 public:
  SensitivitySummary(SummaryKind kind, SymMatrix op, Index n_samples, std::string family_id,
                     NoiseDescriptor noise = {}, std::optional<int> class_label = std::nullopt);

  SummaryKind kind() const noexcept { return kind_; }
  const SymMatrix& op() const noexcept { return op_; }
  Index dim() const noexcept { return op_.dim(); }
  Index n_samples() const noexcept { return n_samples_; }
  const std::string& family_id() const noexcept { return family_id_; }
  const NoiseDescriptor& noise() const noexcept { return noise_; }
  const std::optional<int>& class_label() const noexcept { return class_label_; }

  SensitivitySummary with_operator(SymMatrix op) const;

 private:
  SummaryKind kind_;
  SymMatrix op_;
  Index n_samples_;
  std::string family_id_;
  NoiseDescriptor noise_;
  std::optional<int> class_label_;
};

/// PSD perturbation second moment C_z; normalized means Tr C == 1.
class TaskCovariance {
 public:
  explicit TaskCovariance(SymMatrix c, bool normalized = false);
  static TaskCovariance normalized_from(const SymMatrix& c);

  const SymMatrix& matrix() const noexcept { return c_; }
  bool normalized() const noexcept { return normalized_; }

 private:
  SymMatrix c_;
  bool normalized_;
};

/// (1/n) sum_x (J(x) P)^T (J(x) P).
SensitivitySummary accumulate_pullback(const DifferentiableMap& map, const Dataset& data,
                                       const PerturbationFamily& family, const Execution& exec = {});
SensitivitySummary accumulate_pullback(const RepMap& map, const Dataset& data, const PerturbationFamily& family,
                                       std::optional<Index> layer_index, const Execution& exec = {});

/// E_x[P^T J^T Sigma^{-1} J P]; isotropic noise gives sigma^{-2} times the pullback.
SensitivitySummary accumulate_fisher(const DifferentiableMap& map, const Dataset& data,
                                     const PerturbationFamily& family, const NoiseModel& noise,
                                     const Execution& exec = {});
SensitivitySummary accumulate_fisher(const RepMap& map, const Dataset& data, const PerturbationFamily& family,
                                     const NoiseModel& noise, std::optional<Index> layer_index,
                                     const Execution& exec = {});

/// Tr(C F): expected squared discriminability over the task family.
double task_value(const SensitivitySummary& summary, const TaskCovariance& c);
double task_value(const SymMatrix& op, const SymMatrix& c);

struct GainShape {
  double gain = 0.0;
  SymMatrix shape = SymMatrix::zero(1);
};

GainShape gain_shape(const SensitivitySummary& summary);

struct ClassConditional {
  std::map<int, SensitivitySummary> per_class;
  std::vector<int> missing;
};

/// One pullback summary per label; labels listed in `expected` without samples are reported in `missing`.
ClassConditional class_conditional_summaries(const DifferentiableMap& map, const Dataset& data,
                                             const PerturbationFamily& family,
                                             const std::vector<int>& expected = {},
                                             const Execution& exec = {});

/// Sample-weighted average of summaries over one family.
SensitivitySummary pool_summaries(const std::vector<SensitivitySummary>& parts);

/// Q^T F Q for an orthonormal change of family coordinates.
SensitivitySummary basis_rotate(const SensitivitySummary& summary, const Matrix& q);

/// e_i e_i^T and (e_i + e_j)(e_i + e_j)^T for i < j.
std::vector<SymMatrix> trace_probes(Index k);
/// Recovers an operator from its task values on `trace_probes(k)`.
SymMatrix reconstruct_from_probes(const std::function<double(const SymMatrix&)>& task, Index k);

}  // namespace sras
