#include "elimpcl/mixup.hpp"

#include <string>

#include "elimpcl/errors.hpp"

namespace elimpcl {

RestrictedAlpha restricted_alpha(double alpha, double r) {
  if (!(alpha > 0.0)) throw UsageError("restricted_alpha: alpha must be > 0");
  if (!(r >= 0.0 && r <= 1.0))
    throw UsageError("restricted_alpha: r outside [0,1]");
  return RestrictedAlpha{alpha, r, alpha * r * r};
}

MixedBatch make_mixed_batch(const Matrix& features_a, const IntVector& labels_a,
                            const Matrix& features_b, const IntVector& labels_b,
                            const std::vector<int>& idx_a,
                            const std::vector<int>& idx_b,
                            const Vector& lambdas, int k_classes, MixKind kind) {
  if (idx_a.size() != idx_b.size() ||
      static_cast<Eigen::Index>(idx_a.size()) != lambdas.size())
    throw UsageError("make_mixed_batch: pairing/lambda length mismatch");
  if (features_a.cols() != features_b.cols())
    throw UsageError("make_mixed_batch: feature dim mismatch");

  const auto m = static_cast<Eigen::Index>(idx_a.size());
  MixedBatch mb;
  mb.kind = kind;
  mb.parents_a = idx_a;
  mb.parents_b = idx_b;
  mb.lambdas = lambdas;
  mb.mixed_features = Matrix(m, features_a.cols());
  mb.mixed_labels = Matrix::Zero(m, k_classes);
  for (Eigen::Index j = 0; j < m; ++j) {
    const int a = idx_a[static_cast<std::size_t>(j)];
    const int b = idx_b[static_cast<std::size_t>(j)];
    if (a < 0 || a >= features_a.rows() || b < 0 || b >= features_b.rows())
      throw UsageError("make_mixed_batch: parent index out of range");
    const double lam = lambdas(j);
    if (!(lam >= 0.0 && lam <= 1.0))
      throw UsageError("make_mixed_batch: lambda outside [0,1]");
    mb.mixed_features.row(j) =
        lam * features_a.row(a) + (1.0 - lam) * features_b.row(b);
    mb.mixed_labels(j, labels_a(a)) += lam;
    mb.mixed_labels(j, labels_b(b)) += 1.0 - lam;
  }
  return mb;
}

MixedBatch intra_mix(const Matrix& features_tt, const IntVector& labels_tt,
                     double alpha, int k_classes, RandomSource& rng) {
  if (!(alpha > 0.0)) throw UsageError("intra_mix: alpha must be > 0");
  if (features_tt.rows() != labels_tt.size())
    throw UsageError("intra_mix: label count mismatch");
  const auto n = static_cast<int>(features_tt.rows());
  if (n < 2) return MixedBatch{{}, {}, {}, MixKind::kIntra, {}, {}};

  std::vector<int> idx_a(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx_a[static_cast<std::size_t>(i)] = i;
  const std::vector<int> idx_b = rng.permutation(n);
  Vector lambdas(n);
  for (int i = 0; i < n; ++i) lambdas(i) = sample_beta(alpha, rng);
  return make_mixed_batch(features_tt, labels_tt, features_tt, labels_tt,
                          idx_a, idx_b, lambdas, k_classes, MixKind::kIntra);
}

MixedBatch inter_mix(const Matrix& features_tt, const IntVector& labels_tt,
                     const Matrix& features_ut, const IntVector& labels_ut,
                     const RestrictedAlpha& alpha, int k_classes,
                     RandomSource& rng) {
  if (features_tt.rows() != labels_tt.size() ||
      features_ut.rows() != labels_ut.size())
    throw UsageError("inter_mix: label count mismatch");
  const auto n_tt = static_cast<int>(features_tt.rows());
  const auto n_ut = static_cast<int>(features_ut.rows());
  if (n_tt == 0 || n_ut == 0)
    return MixedBatch{{}, {}, {}, MixKind::kInter, {}, {}};

  const int m = std::min(n_tt, n_ut);
  std::vector<int> idx_a = rng.permutation(n_tt);
  std::vector<int> idx_b = rng.permutation(n_ut);
  idx_a.resize(static_cast<std::size_t>(m));
  idx_b.resize(static_cast<std::size_t>(m));
  Vector lambdas(m);
  for (int i = 0; i < m; ++i) {
    const double lam = sample_beta(alpha.sampling_alpha(), rng);
    lambdas(i) = lam < 0.5 ? 1.0 - lam : lam;  // trustworthy parent dominates
  }
  return make_mixed_batch(features_tt, labels_tt, features_ut, labels_ut,
                          idx_a, idx_b, lambdas, k_classes, MixKind::kInter);
}

namespace {

struct ClassifierGrad {
  double loss = 0.0;
  Matrix d_w;
  Vector d_b;
  Matrix d_features;
};

ClassifierGrad classifier_ce(const ModelParams& params, const Matrix& features,
                             const Matrix& targets) {
  const Matrix logits = (features * params.classifier.w.transpose()).rowwise() +
                        params.classifier.b.transpose();
  const Matrix probs = softmax_rows(logits);
  const auto m = static_cast<double>(features.rows());

  ClassifierGrad out;
  for (Eigen::Index j = 0; j < probs.rows(); ++j)
    out.loss += cross_entropy_row(probs.row(j), targets.row(j));
  out.loss /= m;
  const Matrix dlogits = (probs - targets) / m;
  out.d_w = dlogits.transpose() * features;
  out.d_b = dlogits.colwise().sum();
  out.d_features = dlogits * params.classifier.w;
  return out;
}

}  // namespace

MixLossResult mix_loss(const ModelParams& student, const MixedBatch& mb) {
  if (mb.empty()) throw UsageError("mix_loss: empty mixed batch");
  if (mb.mixed_features.cols() != student.feature_dim())
    throw UsageError("mix_loss: mixed feature dim " +
                     std::to_string(mb.mixed_features.cols()) +
                     " != model feature dim " +
                     std::to_string(student.feature_dim()));
  const ClassifierGrad cg =
      classifier_ce(student, mb.mixed_features, mb.mixed_labels);
  MixLossResult out;
  out.loss = cg.loss;
  out.grads = Gradients::zeros_like(student);
  out.grads.classifier.w = cg.d_w;
  out.grads.classifier.b = cg.d_b;
  return out;
}

MixLossResult mix_loss(const ModelParams& student, const MixedBatch& mb,
                       const ForwardRecord& fwd_a, const ForwardRecord& fwd_b) {
  if (mb.empty()) throw UsageError("mix_loss: empty mixed batch");
  if (fwd_a.features.cols() != student.feature_dim() ||
      fwd_b.features.cols() != student.feature_dim())
    throw UsageError("mix_loss: parent feature dim mismatch");

  const auto m = mb.size();
  Matrix mixed(m, student.feature_dim());
  for (Eigen::Index j = 0; j < m; ++j) {
    const int a = mb.parents_a[static_cast<std::size_t>(j)];
    const int b = mb.parents_b[static_cast<std::size_t>(j)];
    if (a < 0 || a >= fwd_a.features.rows() || b < 0 || b >= fwd_b.features.rows())
      throw UsageError("mix_loss: parent index outside forward record");
    mixed.row(j) = mb.lambdas(j) * fwd_a.features.row(a) +
                   (1.0 - mb.lambdas(j)) * fwd_b.features.row(b);
  }

  const ClassifierGrad cg = classifier_ce(student, mixed, mb.mixed_labels);

  Matrix d_feat_a = Matrix::Zero(fwd_a.features.rows(), fwd_a.features.cols());
  Matrix d_feat_b = Matrix::Zero(fwd_b.features.rows(), fwd_b.features.cols());
  for (Eigen::Index j = 0; j < m; ++j) {
    const int a = mb.parents_a[static_cast<std::size_t>(j)];
    const int b = mb.parents_b[static_cast<std::size_t>(j)];
    d_feat_a.row(a) += mb.lambdas(j) * cg.d_features.row(j);
    d_feat_b.row(b) += (1.0 - mb.lambdas(j)) * cg.d_features.row(j);
  }

  MixLossResult out;
  out.loss = cg.loss;
  out.grads = backprop_from_features(student, fwd_a, d_feat_a);
  out.grads.add_scaled(backprop_from_features(student, fwd_b, d_feat_b), 1.0);
  out.grads.classifier.w = cg.d_w;
  out.grads.classifier.b = cg.d_b;
  return out;
}

}  // namespace elimpcl
