#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sras/gridfisher.hpp"
#include "sras/repmap.hpp"
#include "sras/spd.hpp"
#include "sras/summaries.hpp"

// Desk-scale generators: random MLP banks for the layer-matching harness and
// tuned neural populations on a (theta, rho, phi) grid for grid Fisher work.

namespace sras {

struct MlpSpec {
  Index input_dim = 8;
  std::vector<Index> widths{16, 16, 16, 16};
  Activation fn = Activation::Tanh;
  /// Per-depth weight gain; W ~ N(0, gain^2 / fan_in). Reused cyclically if short.
  std::vector<double> gains{1.0};
  double bias_scale = 0.1;
};

/// [dense, activation] per width. Block l ends at layer index 2(l+1).
RepMap random_mlp(const MlpSpec& spec, std::uint64_t seed);

/// Layer indices after each activation of an MLP built by random_mlp.
std::vector<Index> block_outputs(const RepMap& map);

/// Standard normal samples; labels i mod n_classes when n_classes > 0.
Dataset gaussian_dataset(Index n, Index d, std::uint64_t seed, int n_classes = 0);

/// One cell's tuning:
///   mu = baseline + amplitude * exp(kappa_theta (cos a - 1) + kappa_phi (cos b - 1)
///                                   - (rho - rho_pref)^2 / (2 width_rho^2))
///   a = 2 pi (theta - theta_pref - theta_drift (rho - rho_pref)) / P_theta
///   b = 2 pi (phi - phi_pref) / P_phi - phase_winding 2 pi (theta - theta_pref) / P_theta
///       - phase_drift (rho - rho_pref)
/// With the coupling terms at zero this is von Mises x Gaussian x von Mises.
struct TunedCell {
  double theta_pref = 0.0;
  double kappa_theta = 1.0;
  double rho_pref = 0.0;
  double width_rho = 1.0;
  double phi_pref = 0.0;
  double kappa_phi = 0.0;
  double baseline = 0.0;
  double amplitude = 1.0;
  double theta_drift = 0.0;
  int phase_winding = 0;
  double phase_drift = 0.0;
};

struct PopulationSpec {
  double kappa_theta = 1.5;
  double kappa_phi = 0.5;
  double width_rho = 1.5;
  double baseline = 1.0;
  double amplitude_min = 1.0;
  double amplitude_max = 3.0;
  double theta_drift = 0.0;
  int phase_winding = 0;
  double phase_drift = 0.0;
};

class TunedPopulation {
 public:
  TunedPopulation(std::vector<TunedCell> cells, double theta_period, double phi_period);

  /// Preferences drawn uniformly over the grid's theta/phi periods and rho range.
  static TunedPopulation random(Index n_cells, const ConditionGrid& grid, const PopulationSpec& spec,
                                std::uint64_t seed);

  Index n_cells() const noexcept { return static_cast<Index>(cells_.size()); }
  const std::vector<TunedCell>& cells() const noexcept { return cells_; }

  Vector mean(double theta, double rho, double phi) const;
  /// Analytic n_cells x 3 Jacobian, columns (theta, rho, phi).
  Matrix jacobian(double theta, double rho, double phi) const;
  /// conditions x cells. The grid must have axes (theta, rho, phi) in that order.
  Matrix grid_means(const ConditionGrid& grid) const;

 private:
  std::vector<TunedCell> cells_;
  double theta_period_;
  double phi_period_;
};

/// sigma^2 I + c M / Tr M with M = E_s[d_a mu d_a mu^T] over grid points:
/// noise correlated along the tuning derivative of one axis. The added
/// variance c does not depend on the axis, so unwhitened operators cannot
/// tell the axes apart.
SpdMatrix differential_noise(const TunedPopulation& pop, const ConditionGrid& grid, std::size_t axis, double sigma,
                             double strength);

/// trials_per_condition trials of every condition (condition-major), responses
/// mu(s) + L z with L L^T = noise. No noise when `noise` is empty.
ExperimentRecord sample_record(const TunedPopulation& pop, const ConditionGrid& grid,
                               const std::optional<SpdMatrix>& noise, Index trials_per_condition,
                               std::uint64_t seed, std::string id = "exp", std::string donor = "d0",
                               std::string label = "");

/// The grid-resolution Fisher the generator implies: the finite-difference
/// operator of the exact condition means under the exact noise covariance.
SensitivitySummary generator_fisher(const TunedPopulation& pop, const ConditionGrid& grid, const SpdMatrix& noise);

struct CohortSpec {
  Index n_donors = 4;
  Index experiments_per_donor = 3;
  Index n_cells = 20;
  Index trials_per_condition = 30;
  PopulationSpec population;
  double sigma = 0.5;
  double strength = 5.0;
  /// Differential-noise axis per label; labels alternate across experiments.
  std::vector<std::pair<std::string, std::size_t>> labels{{"A", 0}, {"B", 1}};
};

/// Records named "<donor>-e<j>"; donor i uses label (i + j) mod n_labels.
std::vector<ExperimentRecord> synthetic_cohort(const ConditionGrid& grid, const CohortSpec& spec, std::uint64_t seed);

}  // namespace sras
