#pragma once

#include <Eigen/Dense>

namespace elimpcl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;

constexpr double kLogClampEps = 1e-12;  // floor for log() arguments
constexpr double kNormEps = 1e-12;      // minimum vector norm for cosine

/// Probability vector over K classes: entries in [0,1], summing to 1
/// within 1e-9. Validated on construction.
class ProbVector {
 public:
  explicit ProbVector(Vector p);

  const Vector& vec() const { return p_; }
  double operator[](Eigen::Index k) const { return p_(k); }
  Eigen::Index size() const { return p_.size(); }

 private:
  Vector p_;
};

/// Stable softmax (max-subtraction). Empty input is a usage error,
/// non-finite input a numeric error.
ProbVector softmax(const Vector& logits);

/// Row-wise softmax of a logits matrix; each output row sums to 1.
Matrix softmax_rows(const Matrix& logits);

/// Shannon entropy in nats, with 0*log(0) := 0. Result in [0, log K].
double entropy(const ProbVector& p);

/// Entropy of one row of a row-stochastic matrix (same convention).
double entropy_row(const Eigen::Ref<const Eigen::RowVectorXd>& p);

/// -sum target_k * log(max(pred_k, 1e-12)); lengths must match.
double cross_entropy(const ProbVector& pred, const ProbVector& target);
double cross_entropy_row(const Eigen::Ref<const Eigen::RowVectorXd>& pred,
                         const Eigen::Ref<const Eigen::RowVectorXd>& target);

/// 1 - cos(u, v), in [0, 2]. Throws DegenerateInputError when either
/// norm is below 1e-12; the caller picks the fallback.
double cosine_distance(const Vector& u, const Vector& v);

/// Index of the row maximum, lowest index on exact ties.
Eigen::Index argmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// One-hot row of length k_classes.
Eigen::RowVectorXd one_hot(int label, int k_classes);

}  // namespace elimpcl
