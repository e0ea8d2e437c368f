#include "sras/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>

namespace sras {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = scale * normal(rng);
  }
  return m;
}

void require_tuning_grid(const ConditionGrid& grid) {
  if (grid.n_axes() != 3) fail(ErrorCode::InvalidArgument, "tuned populations need a (theta, rho, phi) grid");
}

}  // namespace

RepMap random_mlp(const MlpSpec& spec, std::uint64_t seed) {
  if (spec.input_dim < 1 || spec.widths.empty() || spec.gains.empty()) {
    fail(ErrorCode::InvalidArgument, "MLP spec needs an input dimension, widths and gains");
  }
  std::mt19937_64 rng(seed);
  std::vector<LayerSpec> layers;
  Index fan_in = spec.input_dim;
  for (std::size_t l = 0; l < spec.widths.size(); ++l) {
    const double gain = spec.gains[l % spec.gains.size()];
    Matrix w = gaussian_matrix(spec.widths[l], fan_in, rng, gain / std::sqrt(static_cast<double>(fan_in)));
    Vector b = gaussian_matrix(spec.widths[l], 1, rng, spec.bias_scale).col(0);
    layers.push_back(LayerSpec::dense(std::move(w), std::move(b)));
    layers.push_back(LayerSpec::activation(spec.fn));
    fan_in = spec.widths[l];
  }
  return RepMap(spec.input_dim, std::move(layers));
}

std::vector<Index> block_outputs(const RepMap& map) {
  std::vector<Index> out;
  for (Index i = 0; i < map.depth(); ++i) {
    if (!map.layers()[static_cast<std::size_t>(i)].is_dense()) out.push_back(i + 1);
  }
  return out;
}

Dataset gaussian_dataset(Index n, Index d, std::uint64_t seed, int n_classes) {
  std::mt19937_64 rng(seed);
  Dataset data{gaussian_matrix(n, d, rng, 1.0), {}};
  if (n_classes > 0) {
    for (Index i = 0; i < n; ++i) data.labels.push_back(static_cast<int>(i % n_classes));
  }
  return data;
}

TunedPopulation::TunedPopulation(std::vector<TunedCell> cells, double theta_period, double phi_period)
    : cells_(std::move(cells)), theta_period_(theta_period), phi_period_(phi_period) {
  if (cells_.empty()) fail(ErrorCode::InvalidArgument, "population needs at least one cell");
  if (!(theta_period_ > 0.0) || !(phi_period_ > 0.0)) fail(ErrorCode::InvalidArgument, "periods must be positive");
}

TunedPopulation TunedPopulation::random(Index n_cells, const ConditionGrid& grid, const PopulationSpec& spec,
                                        std::uint64_t seed) {
  require_tuning_grid(grid);
  const GridAxis& theta = grid.axis(0);
  const GridAxis& rho = grid.axis(1);
  const GridAxis& phi = grid.axis(2);
  const double theta_period = theta.kind == AxisKind::Circular ? theta.period : kTwoPi;
  const double phi_period = phi.kind == AxisKind::Circular ? phi.period : 1.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TunedCell> cells;
  for (Index i = 0; i < n_cells; ++i) {
    TunedCell c;
    c.theta_pref = theta_period * unit(rng);
    c.rho_pref = rho.values.front() + (rho.values.back() - rho.values.front()) * unit(rng);
    c.phi_pref = phi_period * unit(rng);
    c.kappa_theta = spec.kappa_theta;
    c.kappa_phi = spec.kappa_phi;
    c.width_rho = spec.width_rho;
    c.baseline = spec.baseline;
    c.amplitude = spec.amplitude_min + (spec.amplitude_max - spec.amplitude_min) * unit(rng);
    c.theta_drift = spec.theta_drift;
    c.phase_winding = spec.phase_winding;
    c.phase_drift = spec.phase_drift;
    cells.push_back(c);
  }
  return TunedPopulation(std::move(cells), theta_period, phi_period);
}

Vector TunedPopulation::mean(double theta, double rho, double phi) const {
  Vector mu(n_cells());
  for (Index i = 0; i < n_cells(); ++i) {
    const TunedCell& c = cells_[static_cast<std::size_t>(i)];
    const double dr = rho - c.rho_pref;
    const double a = kTwoPi * (theta - c.theta_pref - c.theta_drift * dr) / theta_period_;
    const double b = kTwoPi * (phi - c.phi_pref) / phi_period_ -
                     c.phase_winding * kTwoPi * (theta - c.theta_pref) / theta_period_ - c.phase_drift * dr;
    const double e = c.kappa_theta * (std::cos(a) - 1.0) + c.kappa_phi * (std::cos(b) - 1.0) -
                     dr * dr / (2.0 * c.width_rho * c.width_rho);
    mu(i) = c.baseline + c.amplitude * std::exp(e);
  }
  return mu;
}

Matrix TunedPopulation::jacobian(double theta, double rho, double phi) const {
  Matrix jac(n_cells(), 3);
  for (Index i = 0; i < n_cells(); ++i) {
    const TunedCell& c = cells_[static_cast<std::size_t>(i)];
    const double dr = rho - c.rho_pref;
    const double a = kTwoPi * (theta - c.theta_pref - c.theta_drift * dr) / theta_period_;
    const double b = kTwoPi * (phi - c.phi_pref) / phi_period_ -
                     c.phase_winding * kTwoPi * (theta - c.theta_pref) / theta_period_ - c.phase_drift * dr;
    const double e = c.kappa_theta * (std::cos(a) - 1.0) + c.kappa_phi * (std::cos(b) - 1.0) -
                     dr * dr / (2.0 * c.width_rho * c.width_rho);
    const double g = c.amplitude * std::exp(e);
    const double sa = -c.kappa_theta * std::sin(a);
    const double sb = -c.kappa_phi * std::sin(b);
    const double da_dtheta = kTwoPi / theta_period_;
    const double da_drho = -kTwoPi * c.theta_drift / theta_period_;
    const double db_dtheta = -c.phase_winding * kTwoPi / theta_period_;
    const double db_drho = -c.phase_drift;
    const double db_dphi = kTwoPi / phi_period_;
    jac(i, 0) = g * (sa * da_dtheta + sb * db_dtheta);
    jac(i, 1) = g * (sa * da_drho + sb * db_drho - dr / (c.width_rho * c.width_rho));
    jac(i, 2) = g * sb * db_dphi;
  }
  return jac;
}

Matrix TunedPopulation::grid_means(const ConditionGrid& grid) const {
  require_tuning_grid(grid);
  Matrix means(grid.n_conditions(), n_cells());
  for (Index c = 0; c < grid.n_conditions(); ++c) {
    const Vector p = grid.point(c);
    means.row(c) = mean(p(0), p(1), p(2)).transpose();
  }
  return means;
}

SpdMatrix differential_noise(const TunedPopulation& pop, const ConditionGrid& grid, std::size_t axis, double sigma,
                             double strength) {
  require_tuning_grid(grid);
  if (axis >= 3) fail(ErrorCode::InvalidArgument, "axis index out of range");
  if (!(sigma > 0.0) || strength < 0.0) fail(ErrorCode::InvalidArgument, "noise scale must be positive");
  Matrix m = Matrix::Zero(pop.n_cells(), pop.n_cells());
  for (Index c = 0; c < grid.n_conditions(); ++c) {
    const Vector p = grid.point(c);
    const Vector d = pop.jacobian(p(0), p(1), p(2)).col(static_cast<Index>(axis));
    m += d * d.transpose();
  }
  const double t = m.trace();
  if (t > 0.0) m /= t;
  return SpdMatrix(SymMatrix(sigma * sigma * Matrix::Identity(pop.n_cells(), pop.n_cells()) + strength * m));
}

ExperimentRecord sample_record(const TunedPopulation& pop, const ConditionGrid& grid,
                               const std::optional<SpdMatrix>& noise, Index trials_per_condition,
                               std::uint64_t seed, std::string id, std::string donor, std::string label) {
  if (trials_per_condition < 1) fail(ErrorCode::InvalidArgument, "need at least one trial per condition");
  const Matrix means = pop.grid_means(grid);
  Matrix chol;
  if (noise) {
    if (noise->dim() != pop.n_cells()) fail(ErrorCode::DimMismatch, "noise covariance does not match the population");
    chol = Eigen::LLT<Matrix>(noise->matrix()).matrixL();
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ExperimentRecord record{std::move(id), std::move(donor), std::move(label), {},
                          Matrix(grid.n_conditions() * trials_per_condition, pop.n_cells())};
  Vector z(pop.n_cells());
  Index t = 0;
  for (Index c = 0; c < grid.n_conditions(); ++c) {
    for (Index r = 0; r < trials_per_condition; ++r, ++t) {
      record.conditions.push_back(c);
      record.responses.row(t) = means.row(c);
      if (noise) {
        for (Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
        record.responses.row(t) += (chol * z).transpose();
      }
    }
  }
  return record;
}

SensitivitySummary generator_fisher(const TunedPopulation& pop, const ConditionGrid& grid, const SpdMatrix& noise) {
  const ConditionMeans means{pop.grid_means(grid), std::vector<Index>(static_cast<std::size_t>(grid.n_conditions()), 1)};
  return operator_from_means(means, grid, NoiseModel::full(noise));
}

std::vector<ExperimentRecord> synthetic_cohort(const ConditionGrid& grid, const CohortSpec& spec, std::uint64_t seed) {
  if (spec.labels.empty()) fail(ErrorCode::InvalidArgument, "cohort needs at least one label");
  std::vector<ExperimentRecord> out;
  std::uint64_t stream = 0;
  for (Index d = 0; d < spec.n_donors; ++d) {
    const std::string donor = "d" + std::to_string(d);
    for (Index j = 0; j < spec.experiments_per_donor; ++j, stream += 2) {
      const auto& [label, axis] = spec.labels[static_cast<std::size_t>(d + j) % spec.labels.size()];
      const TunedPopulation pop =
          TunedPopulation::random(spec.n_cells, grid, spec.population, derive_seed(seed, stream));
      const SpdMatrix noise = differential_noise(pop, grid, axis, spec.sigma, spec.strength);
      out.push_back(sample_record(pop, grid, noise, spec.trials_per_condition, derive_seed(seed, stream + 1),
                                  donor + "-e" + std::to_string(j), donor, label));
    }
  }
  return out;
}

}  // namespace sras
