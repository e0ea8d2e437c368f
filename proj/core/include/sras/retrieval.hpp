#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sras/baselines.hpp"
#include "sras/parallel.hpp"
#include "sras/repmap.hpp"
#include "sras/summaries.hpp"

namespace sras {

/// Scores between two entity lists. Distances are stored negated, so larger
/// values always mean more similar.
struct SimilarityMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  Matrix values;
  bool higher_is_similar = true;
};

enum class Comparator { Sras, CkaLinear, CkaRbf, Procrustes, Cca, PwAirm, Msa };

std::string to_string(Comparator c);
Comparator comparator_from_string(const std::string& name);

struct LayerMatchConfig {
  double eps_reg = kDefaultEpsReg;
  RbfBandwidth rbf;
  double cca_ridge = kDefaultCcaRidge;
  Execution exec;
};

struct LayerMatching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // unordered model pairs (a < b)
  std::vector<SimilarityMatrix> matrices;                  // one L x L per pair
  SimilarityMatrix average;
};

/// L x L similarity for every unordered model pair and their entrywise mean.
/// Layer indices follow RepMap numbering. `family` is needed by the
/// sensitivity comparators and ignored by the activation ones.
LayerMatching layer_similarity_matrix(const std::vector<RepMap>& bank, const std::vector<Index>& layers,
                                      Comparator comparator, const Dataset& data, const PerturbationFamily& family,
                                      const LayerMatchConfig& config = {});

struct AccuracyResult {
  double percent = 0.0;
  Index ties = 0;  // row/column argmaxes that were not unique
};

/// Row- and column-wise top-1 hits on the diagonal, in percent. A hit needs
/// the diagonal to be the unique maximum.
AccuracyResult identification_accuracy(const std::vector<SimilarityMatrix>& matrices);

/// Mean similarity at each absolute layer offset 0..L-1.
std::vector<double> decay_curve(const SimilarityMatrix& average);
/// Correct-match similarity minus the best incorrect one, averaged over rows and columns.
double top1_margin(const std::vector<SimilarityMatrix>& matrices);
/// Diagonal (positive) vs off-diagonal (negative) AUC per matrix, averaged.
double diag_auc(const std::vector<SimilarityMatrix>& matrices);

/// Mann-Whitney AUC with midranks for ties.
double auc_midrank(const std::vector<double>& positives, const std::vector<double>& negatives);

struct LayerMatchReport {
  double accuracy_percent = 0.0;
  Index ties = 0;
  double margin = 0.0;
  double diag_auc = 0.0;
  std::vector<double> decay;
};

LayerMatchReport evaluate_layer_matching(const LayerMatching& matching);

struct ExperimentOperator {
  std::string id;
  std::string donor;
  std::string label;
  SymMatrix op = SymMatrix::zero(1);
};

using OperatorSimilarity = std::function<double(const SymMatrix&, const SymMatrix&)>;

/// S-RAS between lifted operators.
OperatorSimilarity sras_similarity(double eps_reg = kDefaultEpsReg);

struct QueryResult {
  std::string query_id;
  std::string match_id;
  bool correct = false;
  double similarity = 0.0;
};

struct RetrievalReport {
  double top1_accuracy = 0.0;  // fraction of answered queries
  double diag_auc = 0.5;
  Index n_queries = 0;
  std::vector<std::string> excluded;
  std::vector<QueryResult> queries;
};

/// Nearest donor-distinct candidate per query; ties go to the earlier record.
RetrievalReport donor_distinct_top1(const std::vector<ExperimentOperator>& records,
                                    const OperatorSimilarity& similarity, unsigned threads = 1);

}  // namespace sras
