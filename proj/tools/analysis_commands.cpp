#include <cmath>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>

#include "common.hpp"
#include "sras/io.hpp"
#include "sras/probes.hpp"
#include "sras/retrieval.hpp"
#include "sras/summaries.hpp"

namespace sras::cli {

namespace {

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

Json summary_json(const SensitivitySummary& s) { return Json::parse(io::summary_to_json(s)); }

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// ---- summarize --------------------------------------------------------------

struct SummarizeArgs {
  std::string model;
  std::string dataset;
  std::string family;
  std::string family_id;
  std::optional<Index> layer;
  std::string kind = "G";
  std::optional<double> sigma;
  std::string noise_cov;
  std::optional<int> class_label;
  std::string out = "summary.json";
};

void run_summarize(const SummarizeArgs& args, const RunConfig& config) {
  Inputs inputs;
  const RepMap model = io::model_from_json(inputs.read("model", args.model), args.model);
  Dataset data = io::dataset_from_csv(inputs.read("dataset", args.dataset), args.dataset);
  const PerturbationFamily family = io::family_from_csv(inputs.read("family", args.family),
                                                        args.family_id.empty() ? stem(args.family) : args.family_id,
                                                        args.family);
  if (args.class_label) {
    if (!data.labeled()) fail(ErrorCode::InvalidArgument, args.dataset + ": --class needs a labeled dataset");
    Dataset subset{Matrix(0, data.dim()), {}};
    std::vector<Index> rows;
    for (Index i = 0; i < data.size(); ++i) {
      if (data.labels[static_cast<std::size_t>(i)] == *args.class_label) rows.push_back(i);
    }
    subset.samples.resize(static_cast<Index>(rows.size()), data.dim());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      subset.samples.row(static_cast<Index>(r)) = data.samples.row(rows[r]);
      subset.labels.push_back(*args.class_label);
    }
    data = std::move(subset);
  }

  std::optional<SensitivitySummary> summary;
  Json params;
  params["kind"] = args.kind;
  params["layer"] = args.layer ? Json(*args.layer) : Json(nullptr);
  params["class"] = args.class_label ? Json(*args.class_label) : Json(nullptr);
  if (args.kind == "G") {
    summary = accumulate_pullback(model, data, family, args.layer, config.exec());
  } else if (args.kind == "F") {
    std::optional<NoiseModel> noise;
    if (!args.noise_cov.empty()) {
      const Matrix cov = io::matrix_from_csv(inputs.read("noise_covariance", args.noise_cov), args.noise_cov);
      noise = NoiseModel::full(SpdMatrix(SymMatrix(cov)));
    } else {
      noise = NoiseModel::isotropic(args.sigma.value_or(1.0));
      params["sigma"] = args.sigma.value_or(1.0);
    }
    summary = accumulate_fisher(model, data, family, *noise, args.layer, config.exec());
  } else {
    fail(ErrorCode::InvalidArgument, "--kind must be G or F");
  }
  if (args.class_label) {
    summary = SensitivitySummary(summary->kind(), summary->op(), summary->n_samples(), summary->family_id(),
                                 summary->noise(), args.class_label);
  }

  Json out = summary_json(*summary);
  out["provenance"] = provenance("summarize", config, inputs, params);
  const auto path = output_path(config, args.out);
  write_output(path, dump(out));
  std::cout << "summary " << args.kind << " k=" << summary->dim() << " n=" << summary->n_samples()
            << " trace=" << summary->op().trace() << " -> " << path.string() << "\n";
}

// ---- compare ----------------------------------------------------------------

void run_compare(const std::string& a_path, const std::string& b_path, const std::optional<double>& task,
                 const std::string& out_path, const RunConfig& config) {
  Inputs inputs;
  const SensitivitySummary a = io::summary_from_json(inputs.read("summary_a", a_path), a_path);
  const SensitivitySummary b = io::summary_from_json(inputs.read("summary_b", b_path), b_path);
  if (a.dim() != b.dim()) fail(ErrorCode::DimMismatch, "summaries have different family dimensions");

  Json warnings = Json::array();
  if (a.family_id() != b.family_id()) {
    const std::string w = "WARNING: family ids differ ('" + a.family_id() + "' vs '" + b.family_id() +
                          "'); scores are family-relative and this comparison is not meaningful";
    warnings.push_back(w);
    std::cerr << w << "\n";
  }
  if (a.kind() != b.kind()) {
    const std::string w = "WARNING: comparing a pullback summary with a Fisher summary";
    warnings.push_back(w);
    std::cerr << w << "\n";
  }

  const SpdMatrix la = spd_lift(a.op(), config.eps_reg);
  const SpdMatrix lb = spd_lift(b.op(), config.eps_reg);
  const Certificate cert = sras_score(la, lb);
  Json out;
  out["k"] = cert.family_dim;
  out["family_id_a"] = a.family_id();
  out["family_id_b"] = b.family_id();
  out["airm_distance"] = cert.airm_distance;
  out["dinf_distance"] = cert.dinf_distance;
  out["sras"] = cert.sras_score;
  out["bound_factor_lower"] = std::exp(-cert.airm_distance);
  out["bound_factor_upper"] = std::exp(cert.airm_distance);
  if (task) {
    const TaskBounds bounds = certificate_bounds(cert, *task);
    out["task_value_a"] = *task;
    out["task_bounds"] = Json{{"lower", bounds.lower}, {"upper", bounds.upper}};
  }
  out["warnings"] = std::move(warnings);
  out["provenance"] = provenance("compare", config, inputs);
  const auto path = output_path(config, out_path);
  write_output(path, dump(out));
  std::cout << std::setprecision(6) << "S-RAS=" << cert.sras_score << " d_AIRM=" << cert.airm_distance
            << " d_inf=" << cert.dinf_distance << " -> " << path.string() << "\n";
}

// ---- probes -----------------------------------------------------------------

struct ProbesArgs {
  std::vector<std::string> group_a;
  std::vector<std::string> group_b;
  Index r = 2;
  bool shape_only = false;
  std::string controls = "random,pooled,permuted";
  Index n_random = 64;
  std::vector<std::string> models;
  std::string dataset;
  std::string family;
  std::string family_id;
  std::string out = "probes";
};

void run_probes(const ProbesArgs& args, const RunConfig& config) {
  Inputs inputs;
  std::vector<SensitivitySummary> a;
  std::vector<SensitivitySummary> b;
  for (const auto& p : args.group_a) a.push_back(io::summary_from_json(inputs.read("group_a", p), p));
  for (const auto& p : args.group_b) b.push_back(io::summary_from_json(inputs.read("group_b", p), p));
  const ContrastOperator contrast = group_contrast(a, b, args.shape_only);
  std::vector<SensitivitySummary> all = a;
  all.insert(all.end(), b.begin(), b.end());
  const SymMatrix pooled = pool_summaries(all).op();

  std::vector<std::pair<std::string, ProbeSet>> sets;
  sets.emplace_back("contrast", top_contrast_directions(contrast, args.r));
  ControlOptions opts;
  opts.r_per_side = args.r;
  opts.n_random_candidates = args.n_random;
  opts.seed = config.seed;
  for (const std::string& name : split_list(args.controls)) {
    const ControlKind kind = control_kind_from_string(name);
    if (kind == ControlKind::Permuted) {
      sets.emplace_back(name, control_probes(permuted_contrast(a, b, args.shape_only, config.seed), pooled, kind, opts));
    } else {
      sets.emplace_back(name, control_probes(contrast, pooled, kind, opts));
    }
  }

  const auto dir = output_path(config, args.out);
  const EigenDecomposition eig = sym_eigendecompose(contrast.delta);
  Json report;
  report["n_group_a"] = a.size();
  report["n_group_b"] = b.size();
  report["shape_only"] = args.shape_only;
  report["r_per_side"] = args.r;
  report["family_id"] = contrast.family_id;
  report["class_label"] = contrast.class_label ? Json(*contrast.class_label) : Json(nullptr);
  report["contrast"] = matrix_json(contrast.delta.matrix());
  report["contrast_eigenvalues"] = vector_json(eig.values);
  Json files = Json::array();
  for (const auto& [name, set] : sets) {
    const std::string file = "probes_" + name + ".json";
    write_output(dir / file, io::probe_set_to_json(set));
    files.push_back(file);
  }
  report["probe_files"] = std::move(files);

  if (!args.models.empty()) {
    if (args.dataset.empty() || args.family.empty()) {
      fail(ErrorCode::InvalidArgument, "scoring needs --dataset and --family");
    }
    const Dataset data = io::dataset_from_csv(inputs.read("dataset", args.dataset), args.dataset);
    if (!data.labeled()) fail(ErrorCode::InvalidArgument, args.dataset + ": scoring needs class labels");
    const PerturbationFamily family = io::family_from_csv(
        inputs.read("family", args.family), args.family_id.empty() ? stem(args.family) : args.family_id, args.family);
    std::vector<RepMap> models;
    for (const auto& m : args.models) models.push_back(io::model_from_json(inputs.read("model", m), m));

    // One row per (model, image, probe kind), filled in parallel, written in order.
    const std::size_t n_rows = models.size() * static_cast<std::size_t>(data.size()) * sets.size();
    std::vector<double> scores(n_rows);
    parallel_for(n_rows, config.threads, [&](std::size_t idx) {
      const std::size_t s = idx % sets.size();
      const std::size_t rest = idx / sets.size();
      const Index i = static_cast<Index>(rest % static_cast<std::size_t>(data.size()));
      const std::size_t m = rest / static_cast<std::size_t>(data.size());
      const LayerView view(models[m]);
      scores[idx] = probe_score(view, data.sample(i), data.labels[static_cast<std::size_t>(i)], sets[s].second, family);
    });
    std::string csv = "model_id,image_id,class,probe_kind,score\n";
    Json means = Json::object();
    std::vector<double> sums(sets.size(), 0.0);
    for (std::size_t idx = 0; idx < n_rows; ++idx) {
      const std::size_t s = idx % sets.size();
      const std::size_t rest = idx / sets.size();
      const Index i = static_cast<Index>(rest % static_cast<std::size_t>(data.size()));
      const std::size_t m = rest / static_cast<std::size_t>(data.size());
      csv += stem(args.models[m]) + "," + std::to_string(i) + "," +
             std::to_string(data.labels[static_cast<std::size_t>(i)]) + "," + sets[s].first + "," +
             io::format_double(scores[idx]) + "\n";
      sums[s] += scores[idx];
    }
    for (std::size_t s = 0; s < sets.size(); ++s) {
      means[sets[s].first] = sums[s] / static_cast<double>(n_rows / sets.size());
    }
    write_output(dir / "scores.csv", csv);
    report["mean_scores"] = std::move(means);
  }

  report["provenance"] = provenance("probes", config, inputs,
                                    Json{{"controls", args.controls}, {"n_random_candidates", args.n_random}});
  write_output(dir / "report.json", dump(report));
  std::cout << "contrast eigenvalues [" << eig.values.minCoeff() << ", " << eig.values.maxCoeff() << "], "
            << sets.size() << " probe sets -> " << dir.string() << "\n";
}

// ---- match-layers -----------------------------------------------------------

struct MatchArgs {
  std::vector<std::string> bank;
  std::string layers;
  std::string comparator = "sras";
  std::string family;
  std::string family_id;
  Index k = 0;
  std::string dataset;
  std::string out = "match";
};

std::string similarity_csv(const SimilarityMatrix& m) {
  std::string header;
  for (std::size_t c = 0; c < m.col_ids.size(); ++c) header += (c ? "," : "") + m.col_ids[c];
  return header + "\n" + io::matrix_to_csv(m.values);
}

void run_match_layers(const MatchArgs& args, const RunConfig& config) {
  Inputs inputs;
  std::vector<RepMap> bank;
  for (const auto& p : args.bank) bank.push_back(io::model_from_json(inputs.read("model", p), p));
  if (bank.size() < 2) fail(ErrorCode::InvalidArgument, "--bank needs at least two models");
  const Dataset data = io::dataset_from_csv(inputs.read("dataset", args.dataset), args.dataset);

  std::unique_ptr<PerturbationFamily> family;
  if (!args.family.empty()) {
    family = std::make_unique<PerturbationFamily>(io::family_from_csv(
        inputs.read("family", args.family), args.family_id.empty() ? stem(args.family) : args.family_id, args.family));
    if (args.k > 0) family = std::make_unique<PerturbationFamily>(restrict_family(*family, args.k));
  } else {
    if (args.k < 1) fail(ErrorCode::InvalidArgument, "give --family or a positive --k for a random family");
    family = std::make_unique<PerturbationFamily>(make_random_family(bank.front().input_dim(), args.k, config.seed));
  }

  std::vector<Index> layers;
  if (args.layers.empty()) {
    for (Index i = 0; i < bank.front().depth(); ++i) {
      if (!bank.front().layers()[static_cast<std::size_t>(i)].is_dense()) layers.push_back(i + 1);
    }
  } else {
    for (const auto& s : split_list(args.layers)) layers.push_back(std::stoll(s));
  }

  const Comparator comparator = comparator_from_string(args.comparator);
  LayerMatchConfig lm;
  lm.eps_reg = config.eps_reg;
  lm.exec = config.exec();
  const LayerMatching matching = layer_similarity_matrix(bank, layers, comparator, data, *family, lm);
  const LayerMatchReport report = evaluate_layer_matching(matching);

  const auto dir = output_path(config, args.out);
  Json pair_files = Json::array();
  for (std::size_t p = 0; p < matching.pairs.size(); ++p) {
    const auto [i, j] = matching.pairs[p];
    const std::string file = "pair_" + stem(args.bank[i]) + "__" + stem(args.bank[j]) + ".csv";
    write_output(dir / file, similarity_csv(matching.matrices[p]));
    pair_files.push_back(file);
  }
  write_output(dir / "average.csv", similarity_csv(matching.average));
  std::string decay = "offset,similarity\n";
  for (std::size_t d = 0; d < report.decay.size(); ++d) decay += std::to_string(d) + "," + io::format_double(report.decay[d]) + "\n";
  write_output(dir / "decay.csv", decay);

  Json out;
  out["comparator"] = to_string(comparator);
  out["higher_is_similar"] = matching.average.higher_is_similar;
  out["n_models"] = bank.size();
  out["layers"] = layers;
  out["family_id"] = family->id();
  out["family_dim"] = family->family_dim();
  out["accuracy"] = report.accuracy_percent;
  out["chance"] = 100.0 / static_cast<double>(layers.size());
  out["ties"] = report.ties;
  out["top1_margin"] = report.margin;
  out["diag_auc"] = report.diag_auc;
  out["decay"] = report.decay;
  out["pair_files"] = std::move(pair_files);
  out["provenance"] = provenance("match-layers", config, inputs,
                                 Json{{"comparator", args.comparator}, {"k", family->family_dim()}});
  write_output(dir / "report.json", dump(out));
  std::cout << to_string(comparator) << ": accuracy " << report.accuracy_percent << "% (chance "
            << 100.0 / static_cast<double>(layers.size()) << "%), diag AUC " << report.diag_auc << " -> "
            << dir.string() << "\n";
}

}  // namespace

void add_analysis_commands(CLI::App& app, RunConfig& config) {
  auto summarize_args = std::make_shared<SummarizeArgs>();
  CLI::App* summarize = app.add_subcommand("summarize", "Accumulate a pullback (G) or Fisher (F) summary");
  summarize->add_option("--model", summarize_args->model, "Model JSON")->required();
  summarize->add_option("--dataset", summarize_args->dataset, "Dataset CSV")->required();
  summarize->add_option("--family", summarize_args->family, "Perturbation family CSV (d x k)")->required();
  summarize->add_option("--family-id", summarize_args->family_id, "Family id (default: file stem)");
  summarize->add_option("--layer", summarize_args->layer, "Layer index (default: output)");
  summarize->add_option("--kind", summarize_args->kind, "G or F")->check(CLI::IsMember({"G", "F"}));
  summarize->add_option("--sigma", summarize_args->sigma, "Isotropic noise scale for F")->check(CLI::PositiveNumber);
  summarize->add_option("--noise-cov", summarize_args->noise_cov, "Full noise covariance CSV for F");
  summarize->add_option("--class", summarize_args->class_label, "Restrict to one class label");
  summarize->add_option("--out", summarize_args->out, "Output JSON");
  summarize->callback([summarize_args, &config] { run_summarize(*summarize_args, config); });

  auto a = std::make_shared<std::string>();
  auto b = std::make_shared<std::string>();
  auto task = std::make_shared<std::optional<double>>();
  auto cmp_out = std::make_shared<std::string>("certificate.json");
  CLI::App* compare = app.add_subcommand("compare", "Certificate and S-RAS score for two summaries");
  compare->add_option("a", *a, "Summary JSON A")->required();
  compare->add_option("b", *b, "Summary JSON B")->required();
  compare->add_option("--task-value", *task, "Tr(C A) for a task to bound on B");
  compare->add_option("--out", *cmp_out, "Output JSON");
  compare->callback([=, &config] { run_compare(*a, *b, *task, *cmp_out, config); });

  auto probes_args = std::make_shared<ProbesArgs>();
  CLI::App* probes = app.add_subcommand("probes", "Contrast probes, controls and optional scoring");
  probes->add_option("--group-a", probes_args->group_a, "Summary JSONs of group A")->required()->delimiter(',');
  probes->add_option("--group-b", probes_args->group_b, "Summary JSONs of group B")->required()->delimiter(',');
  probes->add_option("--r", probes_args->r, "Probes per side")->check(CLI::PositiveNumber);
  probes->add_flag("--shape-only", probes_args->shape_only, "Contrast trace-normalized shapes");
  probes->add_option("--controls", probes_args->controls, "Comma list of random,pooled,permuted (empty for none)");
  probes->add_option("--random-candidates", probes_args->n_random, "Candidates for the random control");
  probes->add_option("--models", probes_args->models, "Model JSONs to score")->delimiter(',');
  probes->add_option("--dataset", probes_args->dataset, "Labeled dataset CSV for scoring");
  probes->add_option("--family", probes_args->family, "Family CSV for scoring");
  probes->add_option("--family-id", probes_args->family_id, "Family id (default: file stem)");
  probes->add_option("--out", probes_args->out, "Output directory");
  probes->callback([probes_args, &config] { run_probes(*probes_args, config); });

  auto match_args = std::make_shared<MatchArgs>();
  CLI::App* match = app.add_subcommand("match-layers", "Layer-identification harness over a model bank");
  match->add_option("--bank", match_args->bank, "Model JSONs")->required()->delimiter(',');
  match->add_option("--layers", match_args->layers, "Comma list of layer indices (default: every activation)");
  match->add_option("--comparator", match_args->comparator, "sras|cka-lin|cka-rbf|procrustes|cca|pw-airm|msa");
  match->add_option("--family", match_args->family, "Family CSV");
  match->add_option("--family-id", match_args->family_id, "Family id (default: file stem)");
  match->add_option("--k", match_args->k, "Family dimension (restricts --family, or sizes a random family)");
  match->add_option("--dataset", match_args->dataset, "Dataset CSV")->required();
  match->add_option("--out", match_args->out, "Output directory");
  match->callback([match_args, &config] { run_match_layers(*match_args, config); });
}

}  // namespace sras::cli
