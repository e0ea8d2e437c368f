#include "sras/probes.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

namespace sras {

namespace {

Matrix group_mean(const std::vector<SensitivitySummary>& group, bool shape_only) {
  Matrix acc = Matrix::Zero(group.front().dim(), group.front().dim());
  for (const auto& s : group) {
    if (shape_only) {
      const double t = s.op().trace();
      if (!(t > 0.0)) fail(ErrorCode::ZeroSummary, "shape contrast needs summaries with positive trace");
      acc += s.op().matrix() / t;
    } else {
      acc += s.op().matrix();
    }
  }
  return acc / static_cast<double>(group.size());
}

void orient(Vector& v) {
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0.0) v = -v;
}

// Ranks candidate unit vectors by v^T delta v; the top r form the + side and
// the bottom r the - side.
ProbeSet rank_candidates(const ContrastOperator& contrast, std::vector<Vector> candidates, Index r) {
  const Index k = contrast.delta.dim();
  if (r < 1 || r > static_cast<Index>(candidates.size())) {
    fail(ErrorCode::InvalidRank, "not enough candidate directions for the requested probes per side");
  }
  std::vector<double> score(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    score[i] = candidates[i].dot(contrast.delta.matrix() * candidates[i]);
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });

  ProbeSet out;
  out.dim = k;
  out.probes_per_side = r;
  out.family_id = contrast.family_id;
  for (Index p = 0; p < r; ++p) {
    const std::size_t i = order[static_cast<std::size_t>(p)];
    out.directions.push_back({ProbeSide::Positive, candidates[i], score[i]});
  }
  for (Index p = 0; p < r; ++p) {
    const std::size_t i = order[order.size() - 1 - static_cast<std::size_t>(p)];
    out.directions.push_back({ProbeSide::Negative, candidates[i], score[i]});
  }
  return out;
}

}  // namespace

std::vector<const ProbeDirection*> ProbeSet::side(ProbeSide s) const {
  std::vector<const ProbeDirection*> out;
  for (const auto& d : directions) {
    if (d.side == s) out.push_back(&d);
  }
  return out;
}

ContrastOperator group_contrast(const std::vector<SensitivitySummary>& group_a,
                                const std::vector<SensitivitySummary>& group_b, bool shape_only) {
  if (group_a.empty() || group_b.empty()) fail(ErrorCode::InvalidArgument, "contrast groups must be non-empty");
  const SensitivitySummary& ref = group_a.front();
  for (const auto* group : {&group_a, &group_b}) {
    for (const auto& s : *group) {
      if (s.family_id() != ref.family_id()) fail(ErrorCode::FamilyMismatch, "contrast mixes perturbation families");
      if (s.dim() != ref.dim()) fail(ErrorCode::DimMismatch, "contrast summaries differ in dimension");
      if (s.class_label() != ref.class_label()) {
        fail(ErrorCode::InvalidArgument, "contrast summaries carry different class labels");
      }
    }
  }
  ContrastOperator out;
  out.delta = SymMatrix(group_mean(group_a, shape_only) - group_mean(group_b, shape_only));
  out.class_label = ref.class_label();
  out.kind = shape_only ? ContrastKind::Shape : ContrastKind::Full;
  out.family_id = ref.family_id();
  return out;
}

ProbeSet top_contrast_directions(const ContrastOperator& contrast, Index r_per_side) {
  const Index k = contrast.delta.dim();
  if (r_per_side < 1 || r_per_side > k) {
    std::ostringstream os;
    os << "cannot take " << r_per_side << " directions per side from a " << k << "-dimensional contrast";
    fail(ErrorCode::InvalidRank, os.str());
  }
  const EigenDecomposition eig = sym_eigendecompose(contrast.delta);
  ProbeSet out;
  out.dim = k;
  out.probes_per_side = r_per_side;
  out.family_id = contrast.family_id;
  for (Index p = 0; p < r_per_side; ++p) {
    out.directions.push_back({ProbeSide::Positive, eig.vectors.col(k - 1 - p), eig.values(k - 1 - p)});
  }
  for (Index p = 0; p < r_per_side; ++p) {
    out.directions.push_back({ProbeSide::Negative, eig.vectors.col(p), eig.values(p)});
  }
  return out;
}

JensenGap shared_vs_pointwise_gap(const std::vector<SymMatrix>& contrasts) {
  if (contrasts.empty()) fail(ErrorCode::InvalidArgument, "need at least one contrast");
  const Index k = contrasts.front().dim();
  Matrix mean = Matrix::Zero(k, k);
  double pointwise = 0.0;
  for (const auto& c : contrasts) {
    if (c.dim() != k) fail(ErrorCode::DimMismatch, "contrasts differ in dimension");
    mean += c.matrix();
    pointwise += sym_eigendecompose(c).max();
  }
  const double n = static_cast<double>(contrasts.size());
  return {sym_eigendecompose(SymMatrix(mean / n)).max(), pointwise / n};
}

double probe_score(const DifferentiableMap& map, const Vector& x, Index true_class, const ProbeSet& probes,
                   const PerturbationFamily& family) {
  if (probes.amplitudes.empty()) fail(ErrorCode::InvalidProbeSet, "probe set has no amplitudes");
  if (probes.dim != family.family_dim()) fail(ErrorCode::DimMismatch, "probe set and family differ in dimension");
  const double base = margin(map, x, true_class);

  auto side_response = [&](ProbeSide s) {
    const auto dirs = probes.side(s);
    if (dirs.empty()) fail(ErrorCode::InvalidProbeSet, "probe set has an empty side");
    double sum = 0.0;
    for (const ProbeDirection* d : dirs) {
      const Vector ambient = family.basis() * d->v;
      for (double a : probes.amplitudes) {
        for (double sign : {-1.0, 1.0}) {
          sum += base - margin(map, x + sign * a * ambient, true_class);
        }
      }
    }
    return sum / static_cast<double>(dirs.size() * probes.amplitudes.size() * 2);
  };
  return side_response(ProbeSide::Positive) - side_response(ProbeSide::Negative);
}

std::string to_string(ControlKind kind) {
  switch (kind) {
    case ControlKind::Random: return "random";
    case ControlKind::Pooled: return "pooled";
    case ControlKind::Permuted: return "permuted";
  }
  return "random";
}

ControlKind control_kind_from_string(const std::string& name) {
  if (name == "random") return ControlKind::Random;
  if (name == "pooled") return ControlKind::Pooled;
  if (name == "permuted") return ControlKind::Permuted;
  fail(ErrorCode::ParseError, "unknown control kind '" + name + "'");
}

ProbeSet control_probes(const ContrastOperator& contrast, const SymMatrix& pooled, ControlKind kind,
                        const ControlOptions& options) {
  const Index k = contrast.delta.dim();
  if (pooled.dim() != k) fail(ErrorCode::DimMismatch, "pooled operator and contrast differ in dimension");
  switch (kind) {
    case ControlKind::Random: {
      std::mt19937_64 rng(options.seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<Vector> candidates;
      for (Index c = 0; c < options.n_random_candidates; ++c) {
        Vector v(k);
        for (Index i = 0; i < k; ++i) v(i) = normal(rng);
        v.normalize();
        orient(v);
        candidates.push_back(std::move(v));
      }
      return rank_candidates(contrast, std::move(candidates), options.r_per_side);
    }
    case ControlKind::Pooled: {
      const Index wanted = options.n_pooled_candidates > 0 ? options.n_pooled_candidates : 2 * options.r_per_side;
      const Index m = std::min(k, wanted);
      const EigenDecomposition eig = sym_eigendecompose(pooled);
      std::vector<Vector> candidates;
      for (Index c = 0; c < m; ++c) candidates.push_back(eig.vectors.col(k - 1 - c));
      return rank_candidates(contrast, std::move(candidates), std::min(options.r_per_side, m));
    }
    case ControlKind::Permuted:
      return top_contrast_directions(contrast, options.r_per_side);
  }
  fail(ErrorCode::InvalidArgument, "unknown control kind");
}

ContrastOperator permuted_contrast(const std::vector<SensitivitySummary>& group_a,
                                   const std::vector<SensitivitySummary>& group_b, bool shape_only,
                                   std::uint64_t seed, const std::optional<std::vector<std::size_t>>& permutation) {
  std::vector<SensitivitySummary> all = group_a;
  all.insert(all.end(), group_b.begin(), group_b.end());
  std::vector<std::size_t> order(all.size());
  if (permutation) {
    if (permutation->size() != all.size()) fail(ErrorCode::InvalidArgument, "permutation has the wrong length");
    order = *permutation;
  } else {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
  }
  std::vector<SensitivitySummary> a;
  std::vector<SensitivitySummary> b;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < group_a.size() ? a : b).push_back(all.at(order[i]));
  }
  ContrastOperator out = group_contrast(a, b, shape_only);
  out.group_a = "A*";
  out.group_b = "B*";
  return out;
}

}  // namespace sras
