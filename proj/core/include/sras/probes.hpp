#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sras/repmap.hpp"
#include "sras/spd.hpp"
#include "sras/summaries.hpp"

namespace sras {

enum class ContrastKind { Full, Shape };

/// mean(group A) - mean(group B) of class-conditional summaries.
struct ContrastOperator {
  SymMatrix delta = SymMatrix::zero(1);
  std::optional<int> class_label;
  std::string group_a = "A";
  std::string group_b = "B";
  ContrastKind kind = ContrastKind::Full;
  std::string family_id;
};

enum class ProbeSide { Positive, Negative };

struct ProbeDirection {
  ProbeSide side = ProbeSide::Positive;
  Vector v;
  double lambda = 0.0;
};

/// Default amplitudes in family-coordinate units.
inline const std::vector<double> kDefaultAmplitudes{0.5, 1.0};

struct ProbeSet {
  std::vector<ProbeDirection> directions;
  std::vector<double> amplitudes = kDefaultAmplitudes;
  Index probes_per_side = 0;
  Index dim = 0;
  std::string family_id;

  std::vector<const ProbeDirection*> side(ProbeSide s) const;
};

ContrastOperator group_contrast(const std::vector<SensitivitySummary>& group_a,
                                const std::vector<SensitivitySummary>& group_b, bool shape_only);

/// + side: eigenvectors of the r largest eigenvalues (descending);
/// - side: eigenvectors of the r smallest (ascending).
ProbeSet top_contrast_directions(const ContrastOperator& contrast, Index r_per_side);

struct JensenGap {
  double shared_max = 0.0;
  double mean_pointwise_max = 0.0;
};

/// lambda_max of the mean contrast vs the mean of pointwise lambda_max.
JensenGap shared_vs_pointwise_gap(const std::vector<SymMatrix>& contrasts);

/// R+ - R-, where each side averages M(x) - M(x + sign * a * P v) over its
/// directions, amplitudes and both signs.
double probe_score(const DifferentiableMap& map, const Vector& x, Index true_class, const ProbeSet& probes,
                   const PerturbationFamily& family);

enum class ControlKind { Random, Pooled, Permuted };

std::string to_string(ControlKind kind);
ControlKind control_kind_from_string(const std::string& name);

struct ControlOptions {
  Index r_per_side = 2;
  /// Random candidates drawn for the random control.
  Index n_random_candidates = 64;
  /// Leading pooled eigenvectors kept for the pooled control; 0 means 2 r.
  Index n_pooled_candidates = 0;
  std::uint64_t seed = 0;
};

/// Control probe sets. For Permuted, `contrast` must already be the contrast
/// rebuilt from permuted group labels (see permuted_contrast).
ProbeSet control_probes(const ContrastOperator& contrast, const SymMatrix& pooled, ControlKind kind,
                        const ControlOptions& options = {});

/// Reassigns the pooled summaries to two groups of the original sizes by a
/// seeded permutation and rebuilds the contrast. `permutation`, when given,
/// replaces the random one.
ContrastOperator permuted_contrast(const std::vector<SensitivitySummary>& group_a,
                                   const std::vector<SensitivitySummary>& group_b, bool shape_only,
                                   std::uint64_t seed,
                                   const std::optional<std::vector<std::size_t>>& permutation = std::nullopt);

}  // namespace sras
