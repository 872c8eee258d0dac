#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "elimpcl/errors.hpp"
#include "elimpcl/numerics.hpp"
#include "elimpcl/random.hpp"

using namespace elimpcl;

namespace {

// Independent extended-precision softmax for oracle values.
std::vector<long double> softmax_oracle(const std::vector<long double>& z) {
  long double m = z[0];
  for (long double v : z) m = std::max(m, v);
  long double sum = 0.0L;
  std::vector<long double> e(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    e[i] = expl(z[i] - m);
    sum += e[i];
  }
  for (auto& v : e) v /= sum;
  return e;
}

Vector random_logits(int n, double scale, RandomSource& rng) {
  Vector z(n);
  for (int i = 0; i < n; ++i) z(i) = scale * (2.0 * rng.uniform() - 1.0);
  return z;
}

}  // namespace

TEST_CASE("softmax: uniform on constant input") {
  const ProbVector p = softmax(Vector::Zero(4));
  for (int k = 0; k < 4; ++k) CHECK(p[k] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("softmax: extreme logits stay finite") {
  Vector z(2);
  z << 1000.0, 0.0;
  const ProbVector p = softmax(z);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(0.0).epsilon(1e-300));
  CHECK(std::isfinite(p[0]));
  CHECK(std::isfinite(p[1]));
}

TEST_CASE("softmax: matches extended-precision evaluation") {
  Vector z(3);
  z << 1.0, 2.0, 3.0;
  const auto oracle = softmax_oracle({1.0L, 2.0L, 3.0L});
  const ProbVector p = softmax(z);
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    CHECK(p[k] == doctest::Approx(static_cast<double>(oracle[static_cast<std::size_t>(k)]))
                      .epsilon(1e-12));
    sum += p[k];
  }
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("softmax: rows sum to 1 for large-magnitude inputs") {
  RandomSource rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(6));
    const double scale = (trial % 2 == 0) ? 1.0 : 1e3;
    const ProbVector p = softmax(random_logits(n, scale, rng));
    CHECK(std::abs(p.vec().sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("softmax: error paths") {
  CHECK_THROWS_AS(softmax(Vector{}), UsageError);
  Vector z(2);
  z << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(softmax(z), NumericError);
  Matrix m(1, 2);
  m << 0.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(softmax_rows(m), NumericError);
}

TEST_CASE("entropy: boundary values") {
  Vector onehot(4);
  onehot << 1.0, 0.0, 0.0, 0.0;
  CHECK(entropy(ProbVector(onehot)) == doctest::Approx(0.0).epsilon(1e-15));
  const ProbVector uniform = softmax(Vector::Zero(4));
  CHECK(entropy(uniform) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("entropy: matches extended-precision evaluation") {
  Vector p(3);
  p << 0.7, 0.2, 0.1;
  const long double oracle = -(0.7L * logl(0.7L) + 0.2L * logl(0.2L) + 0.1L * logl(0.1L));
  CHECK(entropy(ProbVector(p)) ==
        doctest::Approx(static_cast<double>(oracle)).epsilon(1e-14));
}

TEST_CASE("entropy: range [0, log K] over random prob vectors") {
  RandomSource rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(8));
    const ProbVector p = softmax(random_logits(n, 5.0, rng));
    const double h = entropy(p);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(static_cast<double>(n)) + 1e-12);
  }
}

TEST_CASE("cross_entropy: identities") {
  Vector onehot(4);
  onehot << 0.0, 1.0, 0.0, 0.0;
  const ProbVector q(onehot);
  CHECK(cross_entropy(q, q) <= 1e-11);

  const ProbVector uniform = softmax(Vector::Zero(4));
  CHECK(cross_entropy(uniform, q) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  Vector half(2), quarters(2);
  half << 0.5, 0.5;
  quarters << 0.25, 0.75;
  CHECK(cross_entropy(ProbVector(half), ProbVector(quarters)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("cross_entropy: mismatched lengths rejected") {
  Vector a(2), b(3);
  a << 0.5, 0.5;
  b << 0.5, 0.25, 0.25;
  CHECK_THROWS_AS(cross_entropy(ProbVector(a), ProbVector(b)), UsageError);
}

TEST_CASE("cross_entropy(p, p) meets entropy at the Gibbs boundary") {
  RandomSource rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(6));
    const ProbVector p = softmax(random_logits(n, 4.0, rng));
    const double ce = cross_entropy(p, p);
    const double h = entropy(p);
    CHECK(ce >= h - 1e-9);
    CHECK(ce == doctest::Approx(h).epsilon(1e-9));
  }
}

TEST_CASE("cosine_distance: reference directions") {
  Vector u(3), v(3);
  u << 1.0, 2.0, 3.0;
  CHECK(cosine_distance(u, u) == doctest::Approx(0.0).epsilon(1e-15));
  v << -2.0, 1.0, 0.0;
  CHECK(cosine_distance(u, v) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_distance(u, Vector(-u)) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("cosine_distance: degenerate and mismatched inputs") {
  Vector u(3), tiny(3);
  u << 1.0, 0.0, 0.0;
  tiny << 1e-13, 0.0, 0.0;
  CHECK_THROWS_AS(cosine_distance(u, tiny), DegenerateInputError);
  CHECK_THROWS_AS(cosine_distance(u, Vector::Ones(4)), UsageError);
}

TEST_CASE("cosine_distance: symmetry and positive-scale invariance") {
  RandomSource rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(6));
    Vector u(n), v(n);
    for (int i = 0; i < n; ++i) {
      u(i) = rng.normal();
      v(i) = rng.normal();
    }
    if (u.norm() < 1e-6 || v.norm() < 1e-6) continue;
    const double d = cosine_distance(u, v);
    CHECK(d >= -1e-12);
    CHECK(d <= 2.0 + 1e-12);
    CHECK(cosine_distance(v, u) == doctest::Approx(d).epsilon(1e-12));
    const double scale = 0.01 + 100.0 * rng.uniform();
    CHECK(cosine_distance(Vector(scale * u), v) == doctest::Approx(d).epsilon(1e-9));
  }
}

TEST_CASE("ProbVector: rejects invalid inputs") {
  const auto make = [](Vector v) { return ProbVector(std::move(v)); };
  Vector bad_sum(2);
  bad_sum << 0.6, 0.6;
  CHECK_THROWS_AS(make(bad_sum), UsageError);
  Vector bad_entry(2);
  bad_entry << 1.5, -0.5;
  CHECK_THROWS_AS(make(bad_entry), UsageError);
  CHECK_THROWS_AS(make(Vector{}), UsageError);
}

TEST_CASE("argmax_row: lowest index on ties") {
  Eigen::RowVectorXd row(4);
  row << 0.25, 0.25, 0.25, 0.25;
  CHECK(argmax_row(row) == 0);
  row << 0.1, 0.4, 0.4, 0.1;
  CHECK(argmax_row(row) == 1);
}
