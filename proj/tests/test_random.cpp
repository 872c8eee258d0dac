#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "elimpcl/errors.hpp"
#include "elimpcl/random.hpp"

using namespace elimpcl;

TEST_CASE("identical seeds reproduce the identical sequence") {
  RandomSource a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  for (int i = 0; i < 200; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.gamma(0.7) == b.gamma(0.7));
    CHECK(sample_beta(2.0, a) == sample_beta(2.0, b));
  }
}

TEST_CASE("different seeds diverge") {
  RandomSource a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("uniform stays in [0, 1)") {
  RandomSource rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("Beta(1,1) is uniform: Kolmogorov-Smirnov D < 0.01") {
  RandomSource rng(0);
  const int n = 100000;
  std::vector<double> draws(n);
  for (auto& d : draws) d = sample_beta(1.0, rng);
  std::sort(draws.begin(), draws.end());
  double d_stat = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f_lo = static_cast<double>(i) / n;
    const double f_hi = static_cast<double>(i + 1) / n;
    d_stat = std::max(d_stat, std::abs(draws[static_cast<std::size_t>(i)] - f_lo));
    d_stat = std::max(d_stat, std::abs(draws[static_cast<std::size_t>(i)] - f_hi));
  }
  CHECK(d_stat < 0.01);
}

TEST_CASE("Beta(a,a) is symmetric: empirical mean 0.5 within 0.01") {
  for (const double alpha : {0.3, 0.5, 1.0, 2.0, 5.0}) {
    RandomSource rng(123);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += sample_beta(alpha, rng);
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
    CHECK(std::abs(sum / n - 0.5) < 0.01);
  }
}

TEST_CASE("Beta(0.5, 0.5) variance matches the closed form within 0.01") {
  // Var = a^2 / ((2a)^2 (2a + 1)), evaluated independently.
  const double alpha = 0.5;
  const double var_oracle =
      alpha * alpha / ((2 * alpha) * (2 * alpha) * (2 * alpha + 1));
  CHECK(var_oracle == doctest::Approx(0.125));

  RandomSource rng(5);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double b = sample_beta(alpha, rng);
    sum += b;
    sq += b * b;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(var - var_oracle) < 0.01);
}

TEST_CASE("beta draws stay inside [0,1] even for tiny alpha") {
  RandomSource rng(9);
  for (int i = 0; i < 20000; ++i) {
    const double b = sample_beta(1e-3, rng);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0);
    CHECK(std::isfinite(b));
  }
}

TEST_CASE("gamma sampler hits the distribution mean") {
  for (const double alpha : {0.4, 1.0, 3.0, 8.0}) {
    RandomSource rng(31);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.gamma(alpha);
    CHECK(sum / n == doctest::Approx(alpha).epsilon(0.03));
  }
}

TEST_CASE("invalid shape parameters are usage errors") {
  RandomSource rng(1);
  CHECK_THROWS_AS(rng.gamma(0.0), UsageError);
  CHECK_THROWS_AS(rng.gamma(-1.0), UsageError);
  CHECK_THROWS_AS(sample_beta(0.0, rng), UsageError);
  CHECK_THROWS_AS(rng.below(0), UsageError);
}

TEST_CASE("below(n) is bounded and permutation() is a permutation") {
  RandomSource rng(77);
  for (int i = 0; i < 10000; ++i) CHECK(rng.below(13) < 13);
  const std::vector<int> p = rng.permutation(100);
  std::vector<bool> seen(100, false);
  for (int v : p) {
    REQUIRE(v >= 0);
    REQUIRE(v < 100);
    CHECK_FALSE(seen[static_cast<std::size_t>(v)]);
    seen[static_cast<std::size_t>(v)] = true;
  }
}
