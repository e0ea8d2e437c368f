#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sras/retrieval.hpp"
#include "sras/spd.hpp"
#include "sras/summaries.hpp"

namespace sras {

enum class AxisKind { Circular, Linear };

struct GridAxis {
  std::string name;
  AxisKind kind = AxisKind::Linear;
  std::vector<double> values;  // strictly increasing (within one period for circular axes)
  double period = 0.0;         // circular axes only
};

/// Product grid of stimulus coordinates. Conditions are numbered row-major
/// over the axes in declaration order, the last axis varying fastest.
class ConditionGrid {
 public:
  explicit ConditionGrid(std::vector<GridAxis> axes);

  /// 6 orientations (radians, period pi) x 5 spatial frequencies (octaves)
  /// x 4 phases (raw units, period 1): 120 conditions.
  static ConditionGrid static_gratings();

  std::size_t n_axes() const noexcept { return axes_.size(); }
  const GridAxis& axis(std::size_t a) const { return axes_.at(a); }
  const std::vector<GridAxis>& axes() const noexcept { return axes_; }
  Index n_conditions() const noexcept { return n_conditions_; }
  std::vector<Index> coords(Index condition) const;
  Index condition(const std::vector<Index>& coords) const;
  /// Coordinate values of a condition.
  Vector point(Index condition) const;
  /// Axis position by name, e.g. "theta".
  std::size_t axis_index(const std::string& name) const;

 private:
  std::vector<GridAxis> axes_;
  Index n_conditions_ = 0;
};

/// Trial-level responses of one recording.
struct ExperimentRecord {
  std::string id;
  std::string donor;
  std::string label;
  std::vector<Index> conditions;  // per trial
  Matrix responses;               // n_trials x n_cells

  Index n_trials() const noexcept { return responses.rows(); }
  Index n_cells() const noexcept { return responses.cols(); }
  ExperimentRecord select_cells(const std::vector<Index>& cells) const;
  ExperimentRecord select_trials(const std::vector<Index>& trials) const;
};

struct ConditionMeans {
  Matrix means;               // conditions x cells; zero rows where count == 0
  std::vector<Index> counts;  // trials per condition

  bool present(Index c) const { return counts.at(static_cast<std::size_t>(c)) > 0; }
};

ConditionMeans condition_means(const ExperimentRecord& record, const ConditionGrid& grid);

struct LedoitWolf {
  Matrix covariance;
  double shrinkage = 0.0;
};

/// Identity-target Ledoit-Wolf estimate on row samples (columns are re-centered).
LedoitWolf ledoit_wolf(const Matrix& samples);

/// S + eps I, symmetrized, eigenvalues floored at eps.
SpdMatrix regularize_covariance(const Matrix& s, double eps_spd = kDefaultEpsSpd);

struct PooledCovariance {
  SpdMatrix sigma;
  double shrinkage = 0.0;
  Index residual_count = 0;
};

/// Ledoit-Wolf covariance of trial residuals about their condition means.
PooledCovariance pooled_shrinkage_covariance(const ExperimentRecord& record, const ConditionGrid& grid,
                                             const ConditionMeans& means, double eps_spd = kDefaultEpsSpd);

/// n_cells x n_axes Jacobian of the condition means at `condition` by
/// centered differences (wrapping on circular axes). nullopt when a needed
/// neighbor is missing or `condition` sits on a linear-axis endpoint.
std::optional<Matrix> finite_difference_jacobian(const ConditionMeans& means, const ConditionGrid& grid,
                                                 Index condition);

enum class GridMode { Fisher, Naive };

std::string to_string(GridMode mode);
GridMode grid_mode_from_string(const std::string& name);

/// E_s[D^T Sigma^{-1} D] over valid grid points, or the unwhitened
/// E_s[D^T D] when `noise` is empty.
SensitivitySummary operator_from_means(const ConditionMeans& means, const ConditionGrid& grid,
                                       const std::optional<NoiseModel>& noise);

/// F_e (Fisher mode) or G_e (naive mode) for one recording.
SensitivitySummary experiment_operators(const ExperimentRecord& record, const ConditionGrid& grid, GridMode mode,
                                        double eps_spd = kDefaultEpsSpd);

/// P_Q^T F P_Q for the selected axes; shape_only trace-normalizes and needs |Q| >= 2.
SensitivitySummary family_restriction(const SensitivitySummary& op, const std::vector<Index>& axes,
                                      bool shape_only = false);

/// Axis indices for a comma-separated list of axis names.
std::vector<Index> parse_axis_family(const ConditionGrid& grid, const std::string& names);

struct SubsampleConfig {
  Index n_match = 60;
  Index n_subsamples = 100;
  std::uint64_t seed = 0;
  GridMode mode = GridMode::Fisher;
  double eps_spd = kDefaultEpsSpd;
  unsigned threads = 1;
};

/// Mean operator over seeded cell subsamples drawn without replacement.
SensitivitySummary matched_subsample_operators(const ExperimentRecord& record, const ConditionGrid& grid,
                                               const SubsampleConfig& config);

struct SplitHalfConfig {
  Index n_repeats = 8;
  std::uint64_t seed = 0;
  GridMode mode = GridMode::Fisher;
  double eps_spd = kDefaultEpsSpd;
  double eps_reg = kDefaultEpsReg;
};

/// Mean similarity between operators estimated from random within-condition
/// trial halves. Defaults to S-RAS when `comparator` is empty.
double split_half_reliability(const ExperimentRecord& record, const ConditionGrid& grid,
                              const SplitHalfConfig& config, const OperatorSimilarity& comparator = {});

}  // namespace sras
