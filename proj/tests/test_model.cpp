#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "elimpcl/errors.hpp"
#include "elimpcl/model.hpp"

using namespace elimpcl;

namespace {

ModelParams zero_params(const std::vector<int>& dims) {
  RandomSource rng(0);
  ModelParams p = init_params(dims, rng);
  for (auto& layer : p.extractor) {
    layer.w.setZero();
    layer.b.setZero();
  }
  p.classifier.w.setZero();
  p.classifier.b.setZero();
  return p;
}

Matrix random_inputs(int rows, int cols, RandomSource& rng) {
  Matrix x(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) x(i, j) = rng.normal();
  return x;
}

Matrix random_soft_targets(int rows, int k, RandomSource& rng) {
  Matrix t(rows, k);
  for (int i = 0; i < rows; ++i) {
    Vector z(k);
    for (int j = 0; j < k; ++j) z(j) = 2.0 * rng.normal();
    t.row(i) = softmax(z).vec().transpose();
  }
  return t;
}

// Central finite differences of the loss value over every parameter.
Vector fd_gradient(const ModelParams& params, const Matrix& x,
                   const LossSpec& spec, double step) {
  const Vector theta = flatten(params);
  Vector grad(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Vector up = theta, dn = theta;
    up(i) += step;
    dn(i) -= step;
    const double lu = loss_and_gradients(unflatten_like(params, up), x, spec).loss;
    const double ld = loss_and_gradients(unflatten_like(params, dn), x, spec).loss;
    grad(i) = (lu - ld) / (2.0 * step);
  }
  return grad;
}

double max_rel_err(const Vector& a, const Vector& f) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max(1e-8, std::abs(a(i)) + std::abs(f(i)));
    worst = std::max(worst, std::abs(a(i) - f(i)) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("forward: zero params give uniform predictions") {
  const ModelParams p = zero_params({5, 4, 3, 4});
  RandomSource rng(1);
  const ForwardRecord rec = forward(p, random_inputs(6, 5, rng));
  CHECK(rec.logits.cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index k = 0; k < 4; ++k)
      CHECK(rec.probs(i, k) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("forward: identity extractor applies tanh to inputs") {
  ModelParams p = zero_params({3, 3, 2});
  p.extractor[0].w = Matrix::Identity(3, 3);
  RandomSource rng(2);
  const Matrix x = random_inputs(5, 3, rng);
  const ForwardRecord rec = forward(p, x);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      CHECK(rec.features(i, j) == doctest::Approx(std::tanh(x(i, j))).epsilon(1e-15));

  p.activation = Activation::kIdentity;  // linear passthrough hook
  const ForwardRecord lin = forward(p, x);
  CHECK((lin.features - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward: probability rows sum to 1") {
  RandomSource rng(3);
  const ModelParams p = init_params({8, 6, 4, 3}, rng);
  const ForwardRecord rec = forward(p, random_inputs(8, 8, rng));
  for (Eigen::Index i = 0; i < 8; ++i)
    CHECK(std::abs(rec.probs.row(i).sum() - 1.0) < 1e-9);
}

TEST_CASE("forward: deterministic bit-for-bit") {
  RandomSource rng(4);
  const ModelParams p = init_params({6, 5, 4, 3}, rng);
  const Matrix x = random_inputs(7, 6, rng);
  const ForwardRecord a = forward(p, x);
  const ForwardRecord b = forward(p, x);
  CHECK((a.features - b.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.logits - b.logits).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.probs - b.probs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward: shape mismatch is a usage error") {
  RandomSource rng(5);
  const ModelParams p = init_params({6, 5, 4, 3}, rng);
  CHECK_THROWS_AS(forward(p, Matrix::Zero(2, 7)), UsageError);
}

TEST_CASE("loss: entropy-only gradient vanishes at one-hot predictions") {
  ModelParams p = zero_params({4, 3, 3});
  p.classifier.b(0) = 50.0;  // saturated softmax
  RandomSource rng(6);
  const LossSpec spec{0.0, 1.0, {}};
  const LossResult res = loss_and_gradients(p, random_inputs(5, 4, rng), spec);
  CHECK(flatten(res.grads).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("loss: CE is zero when prediction equals a one-hot target") {
  ModelParams p = zero_params({4, 3, 3});
  p.classifier.b(1) = 60.0;
  RandomSource rng(7);
  const Matrix x = random_inputs(5, 4, rng);
  Matrix targets = Matrix::Zero(5, 3);
  targets.col(1).setOnes();
  const LossResult res = loss_and_gradients(p, x, LossSpec{1.0, 0.0, targets});
  CHECK(res.loss <= 1e-9);
  CHECK(res.grads.classifier.b.cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("loss: analytic gradients match central finite differences") {
  RandomSource rng(8);
  for (int trial = 0; trial < 12; ++trial) {
    const int d_in = 2 + static_cast<int>(rng.below(7));
    const int hidden = 2 + static_cast<int>(rng.below(5));
    const int d = 2 + static_cast<int>(rng.below(5));
    const int k = 2 + static_cast<int>(rng.below(3));
    const int batch = 1 + static_cast<int>(rng.below(8));
    const ModelParams p = init_params({d_in, hidden, d, k}, rng);
    const Matrix x = random_inputs(batch, d_in, rng);

    LossSpec spec;
    switch (trial % 3) {
      case 0:
        spec = LossSpec{1.0, 0.0, random_soft_targets(batch, k, rng)};
        break;
      case 1:
        spec = LossSpec{0.0, 1.0, {}};
        break;
      default:
        spec = LossSpec{0.3, 1.0, random_soft_targets(batch, k, rng)};
        break;
    }
    const LossResult res = loss_and_gradients(p, x, spec);
    const Vector fd = fd_gradient(p, x, spec, 1e-5);
    CHECK(max_rel_err(flatten(res.grads), fd) < 1e-5);
  }
}

TEST_CASE("loss: batch/target shape errors") {
  RandomSource rng(9);
  const ModelParams p = init_params({4, 3, 3}, rng);
  CHECK_THROWS_AS(
      loss_and_gradients(p, Matrix::Zero(0, 4), LossSpec{0.0, 1.0, {}}),
      UsageError);
  CHECK_THROWS_AS(
      loss_and_gradients(p, Matrix::Zero(2, 4), LossSpec{1.0, 0.0, Matrix::Zero(3, 3)}),
      UsageError);
}

TEST_CASE("sgd_step: zero gradients leave parameters untouched") {
  RandomSource rng(10);
  const ModelParams p = init_params({4, 3, 3}, rng);
  MomentumState state;
  const ModelParams next =
      sgd_step(p, Gradients::zeros_like(p), SgdOptions{0.1, 0.9, 0.0}, state);
  CHECK((flatten(next) - flatten(p)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sgd_step: plain step and momentum recurrence") {
  ModelParams p = zero_params({1, 1, 2});
  p.extractor[0].w(0, 0) = 1.0;
  Gradients g = Gradients::zeros_like(p);
  g.extractor[0].w(0, 0) = 1.0;

  MomentumState no_momentum;
  const ModelParams after =
      sgd_step(p, g, SgdOptions{0.1, 0.0, 0.0}, no_momentum);
  CHECK(after.extractor[0].w(0, 0) == doctest::Approx(0.9).epsilon(1e-15));

  MomentumState m;
  const SgdOptions opts{0.1, 0.9, 0.0};
  ModelParams w = p;
  w = sgd_step(w, g, opts, m);
  CHECK(w.extractor[0].w(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
  w = sgd_step(w, g, opts, m);  // v = 0.9 + 1 = 1.9, update 0.19
  CHECK(w.extractor[0].w(0, 0) == doctest::Approx(0.71).epsilon(1e-15));

  MomentumState s;
  CHECK_THROWS_AS(sgd_step(p, g, SgdOptions{0.0, 0.9, 0.0}, s), UsageError);
  CHECK_THROWS_AS(sgd_step(p, g, SgdOptions{-0.1, 0.9, 0.0}, s), UsageError);
}

TEST_CASE("beta schedule: paper defaults give 0.4..0.8 in 0.1 steps") {
  const BetaSchedule s = make_beta_schedule(0.3, 0.8, 5);
  CHECK(s.delta == doctest::Approx(0.1).epsilon(1e-15));
  const double expected[] = {0.4, 0.5, 0.6, 0.7, 0.8};
  for (int n = 1; n <= 5; ++n)
    CHECK(s.at(n) == doctest::Approx(expected[n - 1]).epsilon(1e-12));
}

TEST_CASE("beta schedule: constant and quarter sequences") {
  const BetaSchedule c = make_beta_schedule(0.5, 0.5, 3);
  for (int n = 1; n <= 3; ++n) CHECK(c.at(n) == doctest::Approx(0.5).epsilon(1e-15));
  const BetaSchedule q = make_beta_schedule(0.0, 1.0, 4);
  for (int n = 1; n <= 4; ++n)
    CHECK(q.at(n) == doctest::Approx(0.25 * n).epsilon(1e-12));
}

TEST_CASE("beta schedule: terminal value and monotonicity for any N") {
  for (const int n_epochs : {1, 3, 7, 50, 1000}) {
    const BetaSchedule s = make_beta_schedule(0.3, 0.8, n_epochs);
    CHECK(std::abs(s.at(n_epochs) - 0.8) < 1e-12);
    for (int n = 2; n <= n_epochs; ++n) CHECK(s.at(n) > s.at(n - 1));
  }
  CHECK_THROWS_AS(make_beta_schedule(0.8, 0.3, 5), UsageError);
  CHECK_THROWS_AS(make_beta_schedule(-0.1, 0.5, 5), UsageError);
  CHECK_THROWS_AS(make_beta_schedule(0.3, 1.1, 5), UsageError);
  CHECK_THROWS_AS(make_beta_schedule(0.3, 0.8, 0), UsageError);
}

TEST_CASE("fuse_parameters: endpoints are exact copies") {
  RandomSource rng(11);
  const ModelParams s = init_params({5, 4, 3, 2}, rng);
  const ModelParams p = init_params({5, 4, 3, 2}, rng);
  CHECK((flatten(fuse_parameters(s, p, 0.0)) - flatten(p)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((flatten(fuse_parameters(s, p, 1.0)) - flatten(s)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fuse_parameters: element-wise convex combination to 1e-15") {
  RandomSource rng(12);
  const ModelParams s = init_params({5, 4, 3, 2}, rng);
  const ModelParams p = init_params({5, 4, 3, 2}, rng);
  for (const double beta : {0.25, 0.4, 0.9}) {
    const Vector fused = flatten(fuse_parameters(s, p, beta));
    const Vector vs = flatten(s);
    const Vector vp = flatten(p);
    for (Eigen::Index i = 0; i < fused.size(); ++i)
      CHECK(std::abs(fused(i) - (beta * vs(i) + (1.0 - beta) * vp(i))) <= 1e-15);
  }
}

TEST_CASE("fuse_parameters: scalar arithmetic and error paths") {
  ModelParams s = zero_params({1, 1, 2});
  ModelParams p = zero_params({1, 1, 2});
  s.extractor[0].w(0, 0) = 1.0;
  const ModelParams fused = fuse_parameters(s, p, 0.4);
  CHECK(std::abs(fused.extractor[0].w(0, 0) - 0.4) <= 1e-15);

  RandomSource rng(13);
  const ModelParams other = init_params({2, 2, 2}, rng);
  CHECK_THROWS_AS(fuse_parameters(s, other, 0.5), UsageError);
  CHECK_THROWS_AS(fuse_parameters(s, p, 1.5), UsageError);
}

TEST_CASE("init_student: deep copy of donor extractor and classifier") {
  RandomSource rng(14);
  const ModelParams universal = init_params({6, 5, 4, 3}, rng);
  const ModelParams source = init_params({6, 5, 4, 3}, rng);
  const Matrix x = random_inputs(5, 6, rng);

  ModelParams student = init_student(universal, source);
  CHECK((forward(student, x).features - forward(universal, x).features)
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // Training the student must not touch the donors.
  const Vector universal_before = flatten(universal);
  Matrix targets = Matrix::Zero(5, 3);
  targets.col(0).setOnes();
  const LossResult res =
      loss_and_gradients(student, x, LossSpec{1.0, 0.0, targets});
  MomentumState momentum;
  student = sgd_step(student, res.grads, SgdOptions{0.1, 0.9, 0.0}, momentum);
  CHECK((flatten(universal) - universal_before).cwiseAbs().maxCoeff() == 0.0);

  const ModelParams a = init_student(universal, source);
  const ModelParams b = init_student(universal, source);
  CHECK((flatten(a) - flatten(b)).cwiseAbs().maxCoeff() == 0.0);

  const ModelParams narrow = init_params({6, 5, 3, 3}, rng);
  CHECK_THROWS_AS(init_student(narrow, source), UsageError);
}

TEST_CASE("flatten/unflatten round trip") {
  RandomSource rng(15);
  const ModelParams p = init_params({7, 5, 4, 3}, rng);
  const ModelParams q = unflatten_like(p, flatten(p));
  CHECK((flatten(q) - flatten(p)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(unflatten_like(p, Vector::Zero(3)), UsageError);
}
