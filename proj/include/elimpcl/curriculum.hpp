#pragma once

#include <vector>

#include "elimpcl/data.hpp"
#include "elimpcl/model.hpp"

namespace elimpcl {

/// Per-target-sample pseudo-label state. `refined` holds -1 until
/// prototype refinement runs; a refined value of -1 after refinement
/// marks a sample whose feature direction was degenerate, which can
/// never be prototype-consistent.
struct PseudoLabelSet {
  Matrix soft;          // n x K classifier probabilities
  IntVector hard;       // argmax of soft, lowest index on ties
  Vector entropy_norm;  // H(soft) / log K, in [0, 1]
  IntVector refined;    // nearest-prototype labels once computed
  bool has_refined = false;

  Eigen::Index size() const { return hard.size(); }
};

/// Softmax-weighted class centroids over all target samples. Classes
/// whose weight mass falls below 1e-8 (or whose centroid direction
/// vanishes) are flagged degenerate and excluded from refinement.
struct PrototypeSet {
  Matrix prototypes;  // K x d
  Vector weight_mass;
  std::vector<bool> degenerate;

  int degenerate_count() const {
    int n = 0;
    for (bool d : degenerate) n += d ? 1 : 0;
    return n;
  }
};

/// Index partition of the target domain into trustworthy / untrustworthy
/// subsets, with trust ratio r = |trustworthy| / n.
struct SubsetSplit {
  std::vector<int> trustworthy;
  std::vector<int> untrustworthy;
  double r = 0.0;
};

constexpr double kPrototypeMassEps = 1e-8;

PseudoLabelSet pseudo_label(const ModelParams& model, const TargetView& targets);

PrototypeSet compute_prototypes(const ModelParams& model,
                                const TargetView& targets);

/// Nearest prototype by cosine distance, lowest class index on ties;
/// degenerate prototypes are skipped, degenerate features yield -1.
IntVector refine_labels(const Matrix& features, const PrototypeSet& protos);

/// Sample i is trustworthy iff entropy_norm_i < tau_norm and its hard
/// label agrees with the refined label. tau_norm must lie in (0, 1].
SubsetSplit split_trustworthy(const PseudoLabelSet& pl, double tau_norm);

}  // namespace elimpcl
