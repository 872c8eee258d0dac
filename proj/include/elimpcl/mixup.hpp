#pragma once

#include <vector>

#include "elimpcl/model.hpp"
#include "elimpcl/random.hpp"

namespace elimpcl {

enum class MixKind { kIntra, kInter };

/// Feature-space mixtures with soft mixed labels. parents_a/parents_b
/// index into the feature pools the batch was built from; for inter
/// batches the a-side is the trustworthy parent and every lambda is
/// >= 0.5 by the folding rule.
struct MixedBatch {
  Matrix mixed_features;  // m x d
  Matrix mixed_labels;    // m x K, convex combinations of one-hots
  Vector lambdas;         // m, weight of the a-side parent
  MixKind kind = MixKind::kIntra;
  std::vector<int> parents_a;
  std::vector<int> parents_b;

  Eigen::Index size() const { return lambdas.size(); }
  bool empty() const { return lambdas.size() == 0; }
};

constexpr double kRestrictedAlphaFloor = 1e-3;

/// alpha_hat = alpha * r^2, stored exactly; sampling_alpha() applies the
/// 1e-3 floor that keeps Beta sampling stable as r -> 0.
struct RestrictedAlpha {
  double base_alpha = 0.0;
  double r = 0.0;
  double alpha_hat = 0.0;

  double sampling_alpha() const {
    return alpha_hat < kRestrictedAlphaFloor ? kRestrictedAlphaFloor : alpha_hat;
  }
};

RestrictedAlpha restricted_alpha(double alpha, double r);

/// Deterministic assembly from explicit pairings and mixing ratios; the
/// seeded mixers below and the tests both build batches through this.
MixedBatch make_mixed_batch(const Matrix& features_a, const IntVector& labels_a,
                            const Matrix& features_b, const IntVector& labels_b,
                            const std::vector<int>& idx_a,
                            const std::vector<int>& idx_b,
                            const Vector& lambdas, int k_classes, MixKind kind);

/// Pairs a trustworthy pool against a seeded permutation of itself,
/// lambda ~ Beta(alpha, alpha), unfolded. Fewer than 2 samples yields an
/// empty batch for the caller to log and skip.
MixedBatch intra_mix(const Matrix& features_tt, const IntVector& labels_tt,
                     double alpha, int k_classes, RandomSource& rng);

/// Pairs trustworthy against untrustworthy samples (hard pseudo-labels on
/// the untrusted side), lambda ~ Beta(alpha_hat, alpha_hat) folded to
/// max(lambda, 1-lambda). Either pool empty yields an empty batch.
MixedBatch inter_mix(const Matrix& features_tt, const IntVector& labels_tt,
                     const Matrix& features_ut, const IntVector& labels_ut,
                     const RestrictedAlpha& alpha, int k_classes,
                     RandomSource& rng);

struct MixLossResult {
  double loss = 0.0;
  Gradients grads;
};

/// Mean cross-entropy of the classifier on mb.mixed_features against the
/// soft mixed labels. Gradients reach classifier parameters only.
MixLossResult mix_loss(const ModelParams& student, const MixedBatch& mb);

/// Full training path: parent features are re-read from forward records
/// of the pools (computed with the current student), re-mixed with the
/// stored lambdas, and the gradient flows through both parents into the
/// extractor. fwd_a and fwd_b must be forwards of the pools the batch
/// indexes into.
MixLossResult mix_loss(const ModelParams& student, const MixedBatch& mb,
                       const ForwardRecord& fwd_a, const ForwardRecord& fwd_b);

}  // namespace elimpcl
