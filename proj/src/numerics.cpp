#include "elimpcl/numerics.hpp"

#include <cmath>

#include "elimpcl/errors.hpp"

namespace elimpcl {

ProbVector::ProbVector(Vector p) : p_(std::move(p)) {
  if (p_.size() == 0) throw UsageError("ProbVector: empty vector");
  if (!p_.allFinite()) throw UsageError("ProbVector: non-finite entry");
  constexpr double grace = 1e-9;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < p_.size(); ++k) {
    double v = p_(k);
    if (v < -grace || v > 1.0 + grace)
      throw UsageError("ProbVector: entry outside [0,1]");
    v = std::min(std::max(v, 0.0), 1.0);
    p_(k) = v;
    sum += v;
  }
  if (std::abs(sum - 1.0) > grace)
    throw UsageError("ProbVector: entries do not sum to 1");
}

ProbVector softmax(const Vector& logits) {
  if (logits.size() == 0) throw UsageError("softmax: empty input");
  if (!logits.allFinite()) throw NumericError("softmax: non-finite input");
  Vector z = logits.array() - logits.maxCoeff();
  Vector e = z.array().exp();
  return ProbVector(e / e.sum());
}

Matrix softmax_rows(const Matrix& logits) {
  if (logits.size() == 0) throw UsageError("softmax_rows: empty input");
  if (!logits.allFinite()) throw NumericError("softmax_rows: non-finite input");
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::RowVectorXd z =
        logits.row(i).array() - logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = z.array().exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

double entropy_row(const Eigen::Ref<const Eigen::RowVectorXd>& p) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    if (p(k) > 0.0) h -= p(k) * std::log(p(k));
  return h;
}

double entropy(const ProbVector& p) {
  return entropy_row(p.vec().transpose());
}

double cross_entropy_row(const Eigen::Ref<const Eigen::RowVectorXd>& pred,
                         const Eigen::Ref<const Eigen::RowVectorXd>& target) {
  if (pred.size() != target.size())
    throw UsageError("cross_entropy: length mismatch");
  double ce = 0.0;
  for (Eigen::Index k = 0; k < pred.size(); ++k)
    ce -= target(k) * std::log(std::max(pred(k), kLogClampEps));
  return ce;
}

double cross_entropy(const ProbVector& pred, const ProbVector& target) {
  return cross_entropy_row(pred.vec().transpose(), target.vec().transpose());
}

double cosine_distance(const Vector& u, const Vector& v) {
  if (u.size() != v.size())
    throw UsageError("cosine_distance: dimension mismatch");
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu <= kNormEps || nv <= kNormEps)
    throw DegenerateInputError("cosine_distance: near-zero-norm vector");
  return 1.0 - u.dot(v) / (nu * nv);
}

Eigen::Index argmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k)
    if (row(k) > row(best)) best = k;
  return best;
}

Eigen::RowVectorXd one_hot(int label, int k_classes) {
  Eigen::RowVectorXd q = Eigen::RowVectorXd::Zero(k_classes);
  q(label) = 1.0;
  return q;
}

}  // namespace elimpcl
