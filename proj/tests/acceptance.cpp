// Acceptance suite: one PASS/FAIL line per criterion. Run with no arguments
// for all criteria or with criterion numbers to select a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sras/baselines.hpp"
#include "sras/gridfisher.hpp"
#include "sras/io.hpp"
#include "sras/probes.hpp"
#include "sras/repmap.hpp"
#include "sras/retrieval.hpp"
#include "sras/spd.hpp"
#include "sras/summaries.hpp"
#include "sras/synthetic.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace sras;
using namespace sras::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // 0: none
  std::function<Outcome()> run;
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

// ---- 1 ----------------------------------------------------------------------

Outcome spd_theorem_suite() {
  std::mt19937_64 rng(101);
  double worst_sandwich = 0.0;
  long containment_violations = 0;
  double worst_chain = 0.0;
  double worst_attain = 0.0;
  for (Index k : {1, 2, 3, 8, 32}) {
    for (int pair = 0; pair < 500; ++pair) {
      const SpdMatrix a(random_pd(k, rng));
      const SpdMatrix b(random_pd(k, rng));
      const double d = airm_distance(a, b);
      const double dinf = dinf_distance(a, b);
      const Matrix& am = a.matrix();
      const Matrix& bm = b.matrix();
      const double anorm = max_eig(am);

      // (a) e^{-d} A <= B <= e^{d} A, measured relative to ||A||.
      const double lo = min_eig(bm - std::exp(-d) * am);
      const double hi = min_eig(std::exp(d) * am - bm);
      worst_sandwich = std::max(worst_sandwich, -std::min(lo, hi) / anorm);

      // (b) task containment for random PSD C of random rank.
      std::uniform_int_distribution<Index> rank(1, k);
      for (int t = 0; t < 100; ++t) {
        const Matrix c = random_psd(k, rank(rng), rng).matrix();
        const double ta = (c * am).trace();
        const double tb = (c * bm).trace();
        const double slack = 1e-12 * std::exp(d) * ta;
        if (tb < std::exp(-d) * ta - slack || tb > std::exp(d) * ta + slack) ++containment_violations;
      }

      // (c) d_inf <= d_AIRM <= sqrt(k) d_inf.
      worst_chain = std::max({worst_chain, dinf - d, d - std::sqrt(double(k)) * dinf});

      // (d) the rank-one probe from the extreme relative eigenvector attains d_inf.
      const Matrix w = matrix_inv_sqrt(a).matrix();
      Eigen::SelfAdjointEigenSolver<Matrix> rel(w * bm * w);
      double best = 0.0;
      for (Index col : {Index(0), k - 1}) {
        const Vector u = w * rel.eigenvectors().col(col);
        const Matrix c = u * u.transpose();
        best = std::max(best, std::abs(std::log((c * bm).trace() / (c * am).trace())));
      }
      worst_attain = std::max(worst_attain, std::abs(best - dinf));
    }
  }
  const bool pass = worst_sandwich <= 1e-9 && containment_violations == 0 && worst_chain <= 1e-10 &&
                    worst_attain <= 1e-8;
  return {pass, "sandwich " + fmt(worst_sandwich) + ", containment violations " +
                    std::to_string(containment_violations) + ", chain " + fmt(worst_chain) + ", attainment " +
                    fmt(worst_attain)};
}

// ---- 2 ----------------------------------------------------------------------

Outcome minimality_oracle() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const SymMatrix g = random_psd(6, 1 + trial % 6, rng);
    const SymMatrix rebuilt = reconstruct_from_probes([&](const SymMatrix& c) { return task_value(g, c); }, 6);
    worst = std::max(worst, (rebuilt.matrix() - g.matrix()).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-10, "max entry error " + fmt(worst) + " over 200 operators, " +
                              std::to_string(trace_probes(6).size()) + " probes each"};
}

// ---- 3 ----------------------------------------------------------------------

Outcome jvp_correctness() {
  std::mt19937_64 rng(303);
  double worst_fd = 0.0;
  double worst_lin = 0.0;
  const double h = 1e-5;
  for (Activation fn : {Activation::Tanh, Activation::Softplus}) {
    const RepMap net = random_net(6, {10, 8, 5}, fn, rng, 1.2);
    for (int t = 0; t < 100; ++t) {
      const Vector x = gaussian(6, 1, rng).col(0);
      const Vector v = gaussian(6, 1, rng).col(0);
      const Vector j = net.jvp(x, v);
      const Vector fd = (net.forward(x + h * v) - net.forward(x - h * v)) / (2 * h);
      worst_fd = std::max(worst_fd, (j - fd).norm() / std::max(j.norm(), 1e-12));

      const Vector v2 = gaussian(6, 1, rng).col(0);
      const double alpha = 0.7;
      const double beta = -1.3;
      const Vector lhs = net.jvp(x, alpha * v + beta * v2);
      const Vector rhs = alpha * j + beta * net.jvp(x, v2);
      worst_lin = std::max(worst_lin, (lhs - rhs).norm() / std::max(rhs.norm(), 1.0));
    }
  }
  return {worst_fd < 1e-4 && worst_lin <= 1e-12,
          "max rel FD error " + fmt(worst_fd) + ", linearity " + fmt(worst_lin)};
}

// ---- 4 ----------------------------------------------------------------------

Outcome implicit_jacobian() {
  std::mt19937_64 rng(404);
  double worst_fd = 0.0;
  double worst_linear = 0.0;
  const double h = 1e-5;
  SolverConfig tight;
  tight.tol = 1e-13;
  tight.max_iter = 5000;
  for (int sys = 0; sys < 12; ++sys) {
    const Index n = 4 + sys;  // up to 15
    const Index d = 3 + sys % 4;
    Matrix w = gaussian(n, n, rng);
    w *= 0.6 / Eigen::JacobiSVD<Matrix>(w).singularValues()(0);
    const DenseLayer drive{gaussian(n, d, rng), gaussian(n, 1, rng, 0.3).col(0)};

    const FixedPointMap fp(w, drive, Activation::Tanh, tight);
    for (int t = 0; t < 5; ++t) {
      const Vector x = gaussian(d, 1, rng).col(0);
      const Matrix jac = fp.implicit_jacobian(x);
      Matrix fd(n, d);
      for (Index c = 0; c < d; ++c) {
        const Vector e = Vector::Unit(d, c);
        fd.col(c) = (fp.value(x + h * e) - fp.value(x - h * e)) / (2 * h);
      }
      worst_fd = std::max(worst_fd, rel_err(jac, fd));
    }

    const FixedPointMap lin(w, drive, Activation::Identity, tight);
    const Matrix closed = (Matrix::Identity(n, n) - w).partialPivLu().solve(drive.weight);
    worst_linear = std::max(worst_linear, rel_err(lin.implicit_jacobian(gaussian(d, 1, rng).col(0)), closed));
  }
  return {worst_fd < 1e-4 && worst_linear <= 1e-10,
          "max rel error vs FD " + fmt(worst_fd) + ", linear closed form " + fmt(worst_linear)};
}

// ---- 5 ----------------------------------------------------------------------

Outcome isotropic_reduction() {
  std::mt19937_64 rng(505);
  double worst = 0.0;
  for (int net_id = 0; net_id < 5; ++net_id) {
    const RepMap net = random_net(7, {12, 9}, net_id % 2 ? Activation::Tanh : Activation::Softplus, rng);
    const Dataset data{gaussian(40, 7, rng), {}};
    const PerturbationFamily fam = make_random_family(7, 4, 11 + net_id);
    const SensitivitySummary g = accumulate_pullback(net, data, fam, std::nullopt);
    for (double sigma : {0.5, 1.0, 3.0}) {
      const SensitivitySummary f = accumulate_fisher(net, data, fam, NoiseModel::isotropic(sigma), std::nullopt);
      const Matrix want = g.op().matrix() / (sigma * sigma);
      worst = std::max(worst, rel_err(f.op().matrix(), want));
    }
  }
  return {worst <= 1e-12, "max relative deviation " + fmt(worst)};
}

// ---- 6 ----------------------------------------------------------------------

double uncentered_linear_cka(const Matrix& x, const Matrix& y) {
  const double xy = (x.transpose() * y).squaredNorm();
  return xy / ((x.transpose() * x).norm() * (y.transpose() * y).norm());
}

Outcome subset_translation() {
  std::mt19937_64 rng(606);
  const RepMap f = random_net(6, {10, 8}, Activation::Tanh, rng);
  std::vector<LayerSpec> layers = f.layers();
  layers.push_back(LayerSpec::dense(gaussian(5, 8, rng), gaussian(5, 1, rng).col(0)));
  const RepMap base(6, layers);
  const RepMap shifted = base.with_output_shift(Vector::Constant(5, 3.0));
  const RepMap other = random_net(6, {10, 5}, Activation::Tanh, rng);
  const Dataset data{gaussian(50, 6, rng), {}};
  const PerturbationFamily fam = make_random_family(6, 4, 7);

  Matrix act_base(50, 5);
  Matrix act_shift(50, 5);
  for (Index i = 0; i < 50; ++i) {
    act_base.row(i) = base.forward(data.sample(i)).transpose();
    act_shift.row(i) = shifted.forward(data.sample(i)).transpose();
  }
  const double cka_change = std::abs(uncentered_linear_cka(act_base, act_base) - uncentered_linear_cka(act_base, act_shift));

  bool identical = true;
  for (std::optional<Index> layer : {std::optional<Index>{}, std::optional<Index>{2}, std::optional<Index>{4}}) {
    const Matrix g0 = accumulate_pullback(base, data, fam, layer).op().matrix();
    const Matrix g1 = accumulate_pullback(shifted, data, fam, layer).op().matrix();
    const Matrix f0 = accumulate_fisher(base, data, fam, NoiseModel::isotropic(0.7), layer).op().matrix();
    const Matrix f1 = accumulate_fisher(shifted, data, fam, NoiseModel::isotropic(0.7), layer).op().matrix();
    identical = identical && g0 == g1 && f0 == f1;
  }
  const SymMatrix go = accumulate_pullback(other, data, fam, std::nullopt).op();
  const SymMatrix gb = accumulate_pullback(base, data, fam, std::nullopt).op();
  const SymMatrix gs = accumulate_pullback(shifted, data, fam, std::nullopt).op();
  const double s0 = sras_score(spd_lift(gb), spd_lift(go)).sras_score;
  const double s1 = sras_score(spd_lift(gs), spd_lift(go)).sras_score;
  identical = identical && s0 == s1;
  return {identical && cka_change > 1e-3,
          std::string("summaries and S-RAS bit-identical: ") + (identical ? "yes" : "no") +
              ", uncentered CKA change " + fmt(cka_change)};
}

// ---- 7 ----------------------------------------------------------------------

Outcome diagnostics_separation() {
  std::mt19937_64 rng(707);
  double worst_sr = 0.0;
  double worst_airm = 0.0;
  for (Index k : {2, 3, 5, 8}) {
    for (int t = 0; t < 20; ++t) {
      const SpdMatrix a(random_pd(k, rng));
      for (double c : {0.1, 2.0, 10.0}) {
        const SpdMatrix ca(a.sym() * c);
        worst_sr = std::max(worst_sr, std::abs(msa_spectral_ratio(a, ca)));
        worst_airm = std::max(worst_airm, std::abs(airm_distance(a, ca) - std::sqrt(double(k)) * std::abs(std::log(c))));
      }
    }
  }
  // Same relative condition number, different interior spectrum.
  const Matrix q = random_orthogonal(3, rng);
  const SpdMatrix a(SymMatrix(q * Vector(Eigen::Vector3d(1.0, 2.0, 0.5)).asDiagonal() * q.transpose()));
  const Matrix r = matrix_sqrt(a).matrix();
  const SpdMatrix b1(SymMatrix(r * Vector(Eigen::Vector3d(1.0, 1.5, 4.0)).asDiagonal() * r));
  const SpdMatrix b2(SymMatrix(r * Vector(Eigen::Vector3d(1.0, 3.5, 4.0)).asDiagonal() * r));
  const double sr_gap = std::abs(msa_spectral_ratio(a, b1) - msa_spectral_ratio(a, b2));
  const double airm_gap = std::abs(airm_distance(a, b1) - airm_distance(a, b2));
  const bool pass = worst_sr <= 1e-10 && worst_airm <= 1e-10 && sr_gap <= 1e-10 && airm_gap > 1e-3;
  return {pass, "d_SR(A,cA) " + fmt(worst_sr) + ", d_AIRM error " + fmt(worst_airm) + ", collapse pair d_SR gap " +
                    fmt(sr_gap) + " vs d_AIRM gap " + fmt(airm_gap)};
}

// ---- 8 ----------------------------------------------------------------------

/// Two logits [x^T H x / 2, 0]: class 0 margin is an exact quadratic.
class QuadraticMargin final : public DifferentiableMap {
 public:
  explicit QuadraticMargin(Matrix h) : h_(std::move(h)) {}
  Index input_dim() const override { return h_.rows(); }
  Index output_dim() const override { return 2; }
  Vector value(const Vector& x) const override { return Vector(Eigen::Vector2d(0.5 * x.dot(h_ * x), 0.0)); }
  Vector jvp(const Vector& x, const Vector& v) const override { return Vector(Eigen::Vector2d(x.dot(h_ * v), 0.0)); }

 private:
  Matrix h_;
};

Outcome probe_machinery() {
  std::mt19937_64 rng(808);
  const Index k = 6;
  // Rayleigh extremality of the contrast eigenvectors.
  std::vector<SensitivitySummary> ga;
  std::vector<SensitivitySummary> gb;
  for (int i = 0; i < 4; ++i) {
    ga.emplace_back(SummaryKind::Pullback, random_psd(k, k, rng), 10, "fam");
    gb.emplace_back(SummaryKind::Pullback, random_psd(k, k, rng), 10, "fam");
  }
  const ContrastOperator contrast = group_contrast(ga, gb, false);
  const ProbeSet probes = top_contrast_directions(contrast, 1);
  const double top = probes.side(ProbeSide::Positive).front()->lambda;
  const double bottom = probes.side(ProbeSide::Negative).front()->lambda;
  double excess = -1e300;
  for (int t = 0; t < 10000; ++t) {
    const Vector v = random_unit(k, rng);
    const double q = v.dot(contrast.delta.matrix() * v);
    excess = std::max({excess, q - top, bottom - q});
  }

  // Jensen gap on random ensembles.
  int jensen_failures = 0;
  for (int e = 0; e < 1000; ++e) {
    std::vector<SymMatrix> deltas;
    for (int m = 0; m < 2 + e % 7; ++m) deltas.push_back(random_symmetric(4, rng));
    const JensenGap gap = shared_vs_pointwise_gap(deltas);
    if (gap.shared_max > gap.mean_pointwise_max + 1e-12) ++jensen_failures;
  }

  // Closed form: each side responds with -mean(a^2)/2 * mean_v v^T P^T H P v.
  const Index d = 8;
  const Matrix h = random_symmetric(d, rng).matrix();
  const PerturbationFamily fam = make_random_family(d, k, 3);
  ProbeSet qp = probes;
  qp.family_id = fam.id();
  qp.amplitudes = {0.25, 0.5, 1.0};
  const QuadraticMargin model(h);
  const Matrix hp = fam.basis().transpose() * h * fam.basis();
  double mean_a2 = 0.0;
  for (double a : qp.amplitudes) mean_a2 += a * a / qp.amplitudes.size();
  auto side_value = [&](ProbeSide s) {
    double acc = 0.0;
    const auto dirs = qp.side(s);
    for (const ProbeDirection* p : dirs) acc += p->v.dot(hp * p->v);
    return -0.5 * mean_a2 * acc / static_cast<double>(dirs.size());
  };
  const double analytic = side_value(ProbeSide::Positive) - side_value(ProbeSide::Negative);
  double worst_score = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Vector x = gaussian(d, 1, rng).col(0);
    worst_score = std::max(worst_score, std::abs(probe_score(model, x, 0, qp, fam) - analytic));
  }
  const bool pass = excess <= 1e-9 && jensen_failures == 0 && worst_score <= 1e-8;
  return {pass, "Rayleigh excess " + fmt(excess) + ", Jensen failures " + std::to_string(jensen_failures) +
                    ", quadratic score error " + fmt(worst_score)};
}

// ---- 9 ----------------------------------------------------------------------

Outcome layer_matching() {
  MlpSpec spec;
  spec.input_dim = 8;
  spec.widths = {32, 32, 32, 32};
  spec.fn = Activation::Relu;
  spec.gains = {2.0};
  std::vector<RepMap> bank;
  for (std::uint64_t s = 0; s < 4; ++s) bank.push_back(random_mlp(spec, 9000 + s));
  const Dataset data = gaussian_dataset(64, 8, 99);
  const PerturbationFamily fam = make_random_family(8, 4, 5);
  const LayerMatching m = layer_similarity_matrix(bank, block_outputs(bank.front()), Comparator::Sras, data, fam);
  const LayerMatchReport r = evaluate_layer_matching(m);
  bool decreasing = true;
  for (std::size_t i = 1; i < r.decay.size(); ++i) decreasing = decreasing && r.decay[i] < r.decay[i - 1];
  std::string curve;
  for (double v : r.decay) curve += (curve.empty() ? "" : ", ") + fmt(v);
  return {r.accuracy_percent > 25.0 && decreasing,
          "accuracy " + fmt(r.accuracy_percent) + "% (chance 25%), decay [" + curve + "]"};
}

// ---- 10 ---------------------------------------------------------------------

Outcome grid_fisher_oracle() {
  const ConditionGrid grid = ConditionGrid::static_gratings();
  PopulationSpec ps;
  ps.kappa_theta = 1.0;
  ps.kappa_phi = 0.6;
  ps.width_rho = 1.5;
  ps.amplitude_min = 3.0;
  ps.amplitude_max = 6.0;
  ps.theta_drift = 0.15;
  ps.phase_winding = 1;
  ps.phase_drift = 0.4;
  const TunedPopulation pop = TunedPopulation::random(12, grid, ps, 17);
  std::mt19937_64 rng(1010);
  const SpdMatrix noise(SymMatrix(0.04 * random_pd(12, rng, 0.5).matrix()));
  const ExperimentRecord rec = sample_record(pop, grid, noise, 200, 23);
  const Matrix est = experiment_operators(rec, grid, GridMode::Fisher).op().matrix();
  const Matrix oracle = generator_fisher(pop, grid, noise).op().matrix();
  const double worst = ((est - oracle).array() / oracle.array().abs()).abs().maxCoeff();

  // Constant tuning.
  std::vector<TunedCell> flat(8);
  for (auto& c : flat) {
    c.amplitude = 0.0;
    c.baseline = 2.0;
  }
  const TunedPopulation constant(flat, grid.axis(0).period, grid.axis(2).period);
  const Matrix zero = experiment_operators(sample_record(constant, grid, std::nullopt, 3, 1), grid, GridMode::Fisher)
                          .op()
                          .matrix();

  // Sigma = I reproduces the unwhitened operator.
  const ConditionMeans means = condition_means(rec, grid);
  const Matrix with_identity =
      operator_from_means(means, grid, NoiseModel::full(SpdMatrix::identity(rec.n_cells()))).op().matrix();
  const Matrix naive = experiment_operators(rec, grid, GridMode::Naive).op().matrix();
  const bool exact = with_identity == naive;
  const bool pass = worst < 0.10 && zero.cwiseAbs().maxCoeff() == 0.0 && exact;
  return {pass, "max entrywise rel error " + fmt(worst) + ", constant tuning max |F| " +
                    fmt(zero.cwiseAbs().maxCoeff()) + ", identity-noise == G_e: " + (exact ? "yes" : "no")};
}

// ---- 11 ---------------------------------------------------------------------

Outcome donor_distinct_retrieval() {
  // Five independent cohorts; every one must clear the bar on its own.
  const ConditionGrid grid = ConditionGrid::static_gratings();
  const CohortSpec spec;
  const auto sim = sras_similarity();
  double min_fisher = 1.0;
  double mean_fisher = 0.0;
  double mean_naive = 0.0;
  double shuffled = 0.0;
  const int n_cohorts = 5;
  const int n_perm = 100;
  std::mt19937_64 rng(77);
  for (int seed = 1; seed <= n_cohorts; ++seed) {
    std::vector<ExperimentOperator> fisher;
    std::vector<ExperimentOperator> naive;
    for (const auto& r : synthetic_cohort(grid, spec, seed)) {
      fisher.push_back({r.id, r.donor, r.label, experiment_operators(r, grid, GridMode::Fisher).op()});
      naive.push_back({r.id, r.donor, r.label, experiment_operators(r, grid, GridMode::Naive).op()});
    }
    const double acc = donor_distinct_top1(fisher, sim).top1_accuracy;
    min_fisher = std::min(min_fisher, acc);
    mean_fisher += acc / n_cohorts;
    mean_naive += donor_distinct_top1(naive, sim).top1_accuracy / n_cohorts;

    std::vector<std::string> labels;
    for (const auto& r : fisher) labels.push_back(r.label);
    for (int p = 0; p < n_perm; ++p) {
      std::shuffle(labels.begin(), labels.end(), rng);
      std::vector<ExperimentOperator> perm = fisher;
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i].label = labels[i];
      shuffled += donor_distinct_top1(perm, sim).top1_accuracy / (n_perm * n_cohorts);
    }
  }
  const bool pass = min_fisher > 0.8 && mean_fisher > mean_naive && std::abs(shuffled - 0.5) <= 0.15;
  return {pass, "fisher min " + fmt(min_fisher) + " mean " + fmt(mean_fisher) + ", naive mean " + fmt(mean_naive) +
                    ", label-shuffled " + fmt(shuffled) + " (chance 0.5)"};
}

// ---- 12 ---------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SRAS_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = io::read_file(e.path().string());
  }
  return files;
}

Outcome cli_determinism() {
  const fs::path work = fs::path(SRAS_WORK_DIR) / "determinism";
  fs::remove_all(work);
  const fs::path in = work / "inputs";
  fs::create_directories(in);
  const std::string i = in.string() + "/";
  int rc = 0;
  rc |= run_cli("--seed 3 synth bank --models 4 --out " + i + "bank");
  rc |= run_cli("--seed 3 synth dataset --n 40 --dim 8 --classes 2 --out " + i + "data.csv");
  rc |= run_cli("--seed 3 synth family --dim 8 --k 4 --out " + i + "fam.csv");
  rc |= run_cli("synth grid --out " + i + "grid.json");
  rc |= run_cli("--seed 3 synth trials --donors 2 --experiments 2 --cells 12 --trials 6 --out " + i + "trials.csv");
  if (rc != 0) return {false, "failed to generate inputs"};

  const std::string bank = i + "bank/model_0.json," + i + "bank/model_1.json," + i + "bank/model_2.json," + i +
                           "bank/model_3.json";
  std::vector<std::string> pipelines = {
      "synth bank --models 2 --out bank",
      "synth trials --donors 2 --experiments 1 --cells 6 --trials 3 --out trials.csv",
      "match-layers --bank " + bank + " --dataset " + i + "data.csv --family " + i + "fam.csv --out match",
      "match-layers --bank " + bank + " --dataset " + i + "data.csv --k 3 --comparator cka-rbf --out match_rbf",
      "grid-fisher --trials " + i + "trials.csv --grid " + i +
          "grid.json --mode fisher --match 8 --subsamples 4 --split-half 2 --out grid",
      "grid-fisher --trials " + i + "trials.csv --mode naive --family theta,rho --shape-only --out grid_naive",
  };
  for (int m = 0; m < 4; ++m) {
    const std::string ms = std::to_string(m);
    pipelines.push_back("summarize --model " + i + "bank/model_" + ms + ".json --dataset " + i + "data.csv --family " +
                        i + "fam.csv --class " + std::to_string(m % 2 ? 1 : 1) + " --out s" + ms + ".json");
  }
  std::map<std::string, std::string> runs[2];
  int idx = 0;
  for (int threads : {1, 4}) {
    const fs::path out = work / ("run_t" + std::to_string(threads));
    fs::create_directories(out);
    const std::string prefix = "--seed 3 --threads " + std::to_string(threads) + " --out-dir " + out.string() + " ";
    for (const auto& p : pipelines) {
      if (run_cli(prefix + p) != 0) return {false, "pipeline failed: " + p};
    }
    // compare and probes read the summaries this run just wrote.
    const std::string o = out.string() + "/";
    const std::vector<std::string> tail = {
        "compare " + o + "s0.json " + o + "s1.json --out cert.json",
        "probes --group-a " + o + "s0.json," + o + "s1.json --group-b " + o + "s2.json," + o +
            "s3.json --r 2 --models " + i + "bank/model_0.json --dataset " + i + "data.csv --family " + i +
            "fam.csv --out probes",
    };
    for (const auto& t : tail) {
      if (run_cli(prefix + t) != 0) return {false, "pipeline failed: " + t};
    }
    runs[idx++] = snapshot(out);
  }
  // Paths of the two run directories legitimately differ inside provenance.
  const std::string t1 = (work / "run_t1").string();
  const std::string t4 = (work / "run_t4").string();
  std::size_t differing = 0;
  for (const auto& [name, content] : runs[0]) {
    auto it = runs[1].find(name);
    std::string other = it == runs[1].end() ? std::string("<missing>") : it->second;
    for (std::size_t p = other.find(t4); p != std::string::npos; p = other.find(t4, p + t1.size())) {
      other.replace(p, t4.size(), t1);
    }
    if (content != other) ++differing;
  }
  const bool pass = differing == 0 && runs[0].size() == runs[1].size() && !runs[0].empty();
  return {pass, std::to_string(runs[0].size()) + " output files, " + std::to_string(differing) +
                    " differ between --threads 1 and --threads 4"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "SPD theorem suite", 10, spd_theorem_suite},
      {2, "minimality oracle", 5, minimality_oracle},
      {3, "JVP correctness", 30, jvp_correctness},
      {4, "implicit Jacobian", 10, implicit_jacobian},
      {5, "isotropic reduction", 0, isotropic_reduction},
      {6, "subset-translation immunity", 0, subset_translation},
      {7, "diagnostics separation", 0, diagnostics_separation},
      {8, "probe machinery", 0, probe_machinery},
      {9, "layer-matching harness", 120, layer_matching},
      {10, "grid Fisher oracle", 60, grid_fisher_oracle},
      {11, "donor-distinct retrieval", 120, donor_distinct_retrieval},
      {12, "CLI determinism", 0, cli_determinism},
  };
  std::vector<int> selected;
  for (int a = 1; a < argc; ++a) selected.push_back(std::atoi(argv[a]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0 && secs > c.time_limit_s) {
      o.pass = false;
      o.detail += " [over time limit " + fmt(c.time_limit_s) + " s]";
    }
    failures += !o.pass;
    std::printf("%s  #%-2d %-28s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
