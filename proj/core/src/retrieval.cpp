#include "sras/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sras {

namespace {

struct LayerFeature {
  std::optional<SpdMatrix> lifted;
  std::optional<ActivationMatrix> activations;
  std::vector<SpdMatrix> pointwise;
};

bool uses_activations(Comparator c) {
  return c == Comparator::CkaLinear || c == Comparator::CkaRbf || c == Comparator::Procrustes ||
         c == Comparator::Cca;
}

LayerFeature compute_feature(const RepMap& model, Index layer, Comparator comparator, const Dataset& data,
                             const PerturbationFamily& family, const LayerMatchConfig& config) {
  LayerFeature f;
  const LayerView view(model, layer);
  if (comparator == Comparator::Sras) {
    Execution serial = config.exec;
    serial.threads = 1;
    f.lifted = spd_lift(accumulate_pullback(view, data, family, serial).op(), config.eps_reg);
  } else if (uses_activations(comparator)) {
    Matrix acts(data.size(), view.output_dim());
    for (Index i = 0; i < data.size(); ++i) acts.row(i) = view.value(data.sample(i)).transpose();
    f.activations = ActivationMatrix(std::move(acts));
  } else {
    f.pointwise.reserve(static_cast<std::size_t>(data.size()));
    for (Index i = 0; i < data.size(); ++i) {
      const Matrix jp = view.jacobian_columns(data.sample(i), family.basis());
      f.pointwise.push_back(spd_lift(SymMatrix(jp.transpose() * jp), config.eps_reg));
    }
  }
  return f;
}

double compare(const LayerFeature& a, const LayerFeature& b, Comparator comparator, const LayerMatchConfig& config) {
  switch (comparator) {
    case Comparator::Sras: return sras_score(*a.lifted, *b.lifted).sras_score;
    case Comparator::CkaLinear: return linear_cka(*a.activations, *b.activations);
    case Comparator::CkaRbf: return rbf_cka(*a.activations, *b.activations, config.rbf);
    case Comparator::Procrustes: return -procrustes_distance(*a.activations, *b.activations);
    case Comparator::Cca: return cca_r2(*a.activations, *b.activations, config.cca_ridge);
    case Comparator::PwAirm: return -pw_airm(a.pointwise, b.pointwise);
    case Comparator::Msa: return -msa_pointwise(a.pointwise, b.pointwise);
  }
  return 0.0;
}

void require_square(const SimilarityMatrix& m) {
  if (m.values.rows() != m.values.cols() || m.values.rows() < 1) {
    fail(ErrorCode::DimMismatch, "layer matching metrics need square similarity matrices");
  }
}

// Index of the maximum (smallest index on ties) and whether it is unique.
std::pair<Index, bool> argmax_unique(const Vector& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  bool unique = true;
  for (Index i = 0; i < v.size(); ++i) {
    if (i != best && v(i) == v(best)) unique = false;
  }
  return {best, unique};
}

}  // namespace

std::string to_string(Comparator c) {
  switch (c) {
    case Comparator::Sras: return "sras";
    case Comparator::CkaLinear: return "cka-lin";
    case Comparator::CkaRbf: return "cka-rbf";
    case Comparator::Procrustes: return "procrustes";
    case Comparator::Cca: return "cca";
    case Comparator::PwAirm: return "pw-airm";
    case Comparator::Msa: return "msa";
  }
  return "sras";
}

Comparator comparator_from_string(const std::string& name) {
  for (Comparator c : {Comparator::Sras, Comparator::CkaLinear, Comparator::CkaRbf, Comparator::Procrustes,
                       Comparator::Cca, Comparator::PwAirm, Comparator::Msa}) {
    if (to_string(c) == name) return c;
  }
  fail(ErrorCode::ParseError, "unknown comparator '" + name + "'");
}

LayerMatching layer_similarity_matrix(const std::vector<RepMap>& bank, const std::vector<Index>& layers,
                                      Comparator comparator, const Dataset& data, const PerturbationFamily& family,
                                      const LayerMatchConfig& config) {
  if (bank.size() < 2) fail(ErrorCode::InvalidArgument, "layer matching needs at least two models");
  if (layers.empty()) fail(ErrorCode::InvalidArgument, "no layers requested");
  if (data.size() == 0) fail(ErrorCode::EmptyDataset, "layer matching dataset is empty");
  for (const auto& model : bank) {
    if (model.input_dim() != bank.front().input_dim()) fail(ErrorCode::DimMismatch, "bank models differ in input dimension");
  }
  if (!uses_activations(comparator) && family.ambient_dim() != bank.front().input_dim()) {
    fail(ErrorCode::DimMismatch, "family does not match the bank's input dimension");
  }

  const std::size_t n_models = bank.size();
  const std::size_t n_layers = layers.size();
  std::vector<LayerFeature> features(n_models * n_layers);
  parallel_for(features.size(), config.exec.threads, [&](std::size_t t) {
    const std::size_t m = t / n_layers;
    const std::size_t l = t % n_layers;
    features[t] = compute_feature(bank[m], layers[l], comparator, data, family, config);
  });

  LayerMatching out;
  for (std::size_t a = 0; a < n_models; ++a) {
    for (std::size_t b = a + 1; b < n_models; ++b) out.pairs.emplace_back(a, b);
  }
  std::vector<std::string> ids;
  for (Index layer : layers) ids.push_back("L" + std::to_string(layer));

  const Index L = static_cast<Index>(n_layers);
  out.matrices.resize(out.pairs.size());
  parallel_for(out.pairs.size(), config.exec.threads, [&](std::size_t p) {
    const auto [a, b] = out.pairs[p];
    SimilarityMatrix s{ids, ids, Matrix(L, L), true};
    for (Index i = 0; i < L; ++i) {
      for (Index j = 0; j < L; ++j) {
        s.values(i, j) = compare(features[a * n_layers + static_cast<std::size_t>(i)],
                                 features[b * n_layers + static_cast<std::size_t>(j)], comparator, config);
      }
    }
    out.matrices[p] = std::move(s);
  });

  out.average = SimilarityMatrix{ids, ids, Matrix::Zero(L, L), true};
  for (const auto& m : out.matrices) out.average.values += m.values;
  out.average.values /= static_cast<double>(out.matrices.size());
  return out;
}

AccuracyResult identification_accuracy(const std::vector<SimilarityMatrix>& matrices) {
  if (matrices.empty()) return {};
  double hits = 0.0;
  double total = 0.0;
  AccuracyResult out;
  for (const auto& m : matrices) {
    require_square(m);
    const Index L = m.values.rows();
    for (Index i = 0; i < L; ++i) {
      const auto [row_best, row_unique] = argmax_unique(m.values.row(i).transpose());
      const auto [col_best, col_unique] = argmax_unique(m.values.col(i));
      if (!row_unique) ++out.ties;
      if (!col_unique) ++out.ties;
      if (row_best == i && row_unique) hits += 1.0;
      if (col_best == i && col_unique) hits += 1.0;
      total += 2.0;
    }
  }
  out.percent = 100.0 * hits / total;
  return out;
}

std::vector<double> decay_curve(const SimilarityMatrix& average) {
  require_square(average);
  const Index L = average.values.rows();
  std::vector<double> sum(static_cast<std::size_t>(L), 0.0);
  std::vector<double> count(static_cast<std::size_t>(L), 0.0);
  for (Index i = 0; i < L; ++i) {
    for (Index j = 0; j < L; ++j) {
      const auto delta = static_cast<std::size_t>(std::abs(i - j));
      sum[delta] += average.values(i, j);
      count[delta] += 1.0;
    }
  }
  for (std::size_t d = 0; d < sum.size(); ++d) sum[d] /= count[d];
  return sum;
}

double top1_margin(const std::vector<SimilarityMatrix>& matrices) {
  double sum = 0.0;
  double count = 0.0;
  for (const auto& m : matrices) {
    require_square(m);
    const Index L = m.values.rows();
    if (L < 2) continue;
    for (Index i = 0; i < L; ++i) {
      double row_other = -std::numeric_limits<double>::infinity();
      double col_other = -std::numeric_limits<double>::infinity();
      for (Index j = 0; j < L; ++j) {
        if (j == i) continue;
        row_other = std::max(row_other, m.values(i, j));
        col_other = std::max(col_other, m.values(j, i));
      }
      sum += (m.values(i, i) - row_other) + (m.values(i, i) - col_other);
      count += 2.0;
    }
  }
  return count > 0.0 ? sum / count : 0.0;
}

double auc_midrank(const std::vector<double>& positives, const std::vector<double>& negatives) {
  if (positives.empty() || negatives.empty()) return 0.5;
  std::vector<std::pair<double, bool>> all;
  all.reserve(positives.size() + negatives.size());
  for (double p : positives) all.emplace_back(p, true);
  for (double n : negatives) all.emplace_back(n, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j + 1 < all.size() && all[j + 1].first == all[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (all[t].second) rank_sum += midrank;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(positives.size());
  const double nn = static_cast<double>(negatives.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double diag_auc(const std::vector<SimilarityMatrix>& matrices) {
  if (matrices.empty()) return 0.5;
  double sum = 0.0;
  for (const auto& m : matrices) {
    require_square(m);
    std::vector<double> pos;
    std::vector<double> neg;
    for (Index i = 0; i < m.values.rows(); ++i) {
      for (Index j = 0; j < m.values.cols(); ++j) (i == j ? pos : neg).push_back(m.values(i, j));
    }
    sum += auc_midrank(pos, neg);
  }
  return sum / static_cast<double>(matrices.size());
}

LayerMatchReport evaluate_layer_matching(const LayerMatching& matching) {
  LayerMatchReport r;
  const AccuracyResult acc = identification_accuracy(matching.matrices);
  r.accuracy_percent = acc.percent;
  r.ties = acc.ties;
  r.margin = top1_margin(matching.matrices);
  r.diag_auc = diag_auc(matching.matrices);
  r.decay = decay_curve(matching.average);
  return r;
}

OperatorSimilarity sras_similarity(double eps_reg) {
  return [eps_reg](const SymMatrix& a, const SymMatrix& b) {
    return sras_score(spd_lift(a, eps_reg), spd_lift(b, eps_reg)).sras_score;
  };
}

RetrievalReport donor_distinct_top1(const std::vector<ExperimentOperator>& records,
                                    const OperatorSimilarity& similarity, unsigned threads) {
  const std::size_t n = records.size();
  Matrix sim = Matrix::Zero(static_cast<Index>(n), static_cast<Index>(n));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (records[i].donor != records[j].donor) pairs.emplace_back(i, j);
    }
  }
  std::vector<double> values(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t p) {
    values[p] = similarity(records[pairs[p].first].op, records[pairs[p].second].op);
  });
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto i = static_cast<Index>(pairs[p].first);
    const auto j = static_cast<Index>(pairs[p].second);
    sim(i, j) = sim(j, i) = values[p];
  }

  RetrievalReport report;
  double hits = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    std::optional<std::size_t> best;
    for (std::size_t c = 0; c < n; ++c) {
      if (c == q || records[c].donor == records[q].donor) continue;
      if (!best || sim(static_cast<Index>(q), static_cast<Index>(c)) >
                       sim(static_cast<Index>(q), static_cast<Index>(*best))) {
        best = c;
      }
    }
    if (!best) {
      report.excluded.push_back(records[q].id);
      continue;
    }
    QueryResult r{records[q].id, records[*best].id, records[*best].label == records[q].label,
                  sim(static_cast<Index>(q), static_cast<Index>(*best))};
    hits += r.correct ? 1.0 : 0.0;
    report.queries.push_back(std::move(r));
  }
  report.n_queries = static_cast<Index>(report.queries.size());
  report.top1_accuracy = report.n_queries > 0 ? hits / static_cast<double>(report.n_queries) : 0.0;

  std::vector<double> same;
  std::vector<double> different;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const bool match = records[pairs[p].first].label == records[pairs[p].second].label;
    (match ? same : different).push_back(values[p]);
  }
  report.diag_auc = auc_midrank(same, different);
  return report;
}

}  // namespace sras
