#include "elimpcl/random.hpp"

#include <cmath>

#include "elimpcl/errors.hpp"

namespace elimpcl {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed) {
  std::uint64_t s = seed;
  for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t RandomSource::next_u64() {
  // xoshiro256** by Blackman & Vigna.
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RandomSource::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::uniform_pos() { return 1.0 - uniform(); }

double RandomSource::normal() {
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

double RandomSource::gamma(double alpha) {
  if (!(alpha > 0.0)) throw UsageError("gamma: alpha must be > 0");
  if (alpha < 1.0) {
    const double g = gamma(alpha + 1.0);
    return g * std::pow(uniform_pos(), 1.0 / alpha);
  }
  // Marsaglia-Tsang squeeze.
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_pos();
    if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RandomSource::log_gamma_draw(double alpha) {
  if (!(alpha > 0.0)) throw UsageError("log_gamma_draw: alpha must be > 0");
  if (alpha >= 1.0) return std::log(gamma(alpha));
  return std::log(gamma(alpha + 1.0)) + std::log(uniform_pos()) / alpha;
}

std::uint64_t RandomSource::below(std::uint64_t n) {
  if (n == 0) throw UsageError("below: n must be >= 1");
  // Rejection against the largest multiple of n.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

std::vector<int> RandomSource::permutation(int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  shuffle(p);
  return p;
}

double sample_beta(double alpha, RandomSource& rng) {
  if (!(alpha > 0.0)) throw UsageError("sample_beta: alpha must be > 0");
  if (alpha >= 1.0) {
    double x, y;
    do {
      x = rng.gamma(alpha);
      y = rng.gamma(alpha);
    } while (x + y <= 0.0);
    return x / (x + y);
  }
  // x/(x+y) = 1/(1 + exp(log y - log x)); exact at the ends where the
  // raw draws underflow.
  const double lx = rng.log_gamma_draw(alpha);
  const double ly = rng.log_gamma_draw(alpha);
  const double d = ly - lx;
  if (d > 700.0) return 0.0;
  if (d < -700.0) return 1.0;
  return 1.0 / (1.0 + std::exp(d));
}

}  // namespace elimpcl
