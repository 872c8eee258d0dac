#include "elimpcl/curriculum.hpp"

#include <cmath>

#include "elimpcl/errors.hpp"

namespace elimpcl {

PseudoLabelSet pseudo_label(const ModelParams& model, const TargetView& targets) {
  if (targets.inputs.rows() == 0)
    throw UsageError("pseudo_label: empty target set");
  if (model.class_count() < 2)
    throw UsageError("pseudo_label: model must have >= 2 classes");
  const ForwardRecord rec = forward(model, targets.inputs);
  const double log_k = std::log(static_cast<double>(model.class_count()));

  PseudoLabelSet pl;
  pl.soft = rec.probs;
  pl.hard = IntVector(rec.probs.rows());
  pl.entropy_norm = Vector(rec.probs.rows());
  pl.refined = IntVector::Constant(rec.probs.rows(), -1);
  for (Eigen::Index i = 0; i < rec.probs.rows(); ++i) {
    pl.hard(i) = static_cast<int>(argmax_row(rec.probs.row(i)));
    pl.entropy_norm(i) = entropy_row(rec.probs.row(i)) / log_k;
  }
  return pl;
}

PrototypeSet compute_prototypes(const ModelParams& model,
                                const TargetView& targets) {
  if (targets.inputs.rows() == 0)
    throw UsageError("compute_prototypes: empty target set");
  const ForwardRecord rec = forward(model, targets.inputs);
  const Eigen::Index k_classes = rec.probs.cols();

  PrototypeSet protos;
  protos.weight_mass = rec.probs.colwise().sum();
  protos.prototypes = Matrix::Zero(k_classes, rec.features.cols());
  protos.degenerate.assign(static_cast<std::size_t>(k_classes), false);
  const Matrix weighted = rec.probs.transpose() * rec.features;  // K x d
  for (Eigen::Index k = 0; k < k_classes; ++k) {
    if (protos.weight_mass(k) < kPrototypeMassEps) {
      protos.degenerate[static_cast<std::size_t>(k)] = true;
      continue;
    }
    protos.prototypes.row(k) = weighted.row(k) / protos.weight_mass(k);
    if (protos.prototypes.row(k).norm() <= kNormEps)
      protos.degenerate[static_cast<std::size_t>(k)] = true;
  }
  return protos;
}

IntVector refine_labels(const Matrix& features, const PrototypeSet& protos) {
  if (features.cols() != protos.prototypes.cols())
    throw UsageError("refine_labels: feature dim != prototype dim");
  const Eigen::Index k_classes = protos.prototypes.rows();
  if (protos.degenerate_count() == static_cast<int>(k_classes))
    throw ConfigError("refine_labels: every prototype is degenerate");

  IntVector refined(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Vector f = features.row(i).transpose();
    if (f.norm() <= kNormEps) {
      refined(i) = -1;
      continue;
    }
    int best = -1;
    double best_dist = 0.0;
    for (Eigen::Index k = 0; k < k_classes; ++k) {
      if (protos.degenerate[static_cast<std::size_t>(k)]) continue;
      const double dist = cosine_distance(f, protos.prototypes.row(k).transpose());
      if (best < 0 || dist < best_dist) {
        best = static_cast<int>(k);
        best_dist = dist;
      }
    }
    refined(i) = best;
  }
  return refined;
}

SubsetSplit split_trustworthy(const PseudoLabelSet& pl, double tau_norm) {
  if (!(tau_norm > 0.0 && tau_norm <= 1.0))
    throw UsageError("split_trustworthy: tau_norm must be in (0, 1]");
  if (!pl.has_refined)
    throw UsageError("split_trustworthy: refined labels not set");

  SubsetSplit split;
  const Eigen::Index n = pl.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool confident = pl.entropy_norm(i) < tau_norm;
    const bool consistent = pl.hard(i) == pl.refined(i);
    if (confident && consistent)
      split.trustworthy.push_back(static_cast<int>(i));
    else
      split.untrustworthy.push_back(static_cast<int>(i));
  }
  split.r = n > 0 ? static_cast<double>(split.trustworthy.size()) /
                        static_cast<double>(n)
                  : 0.0;
  return split;
}

}  // namespace elimpcl
