#pragma once

#include <cstdint>
#include <vector>

namespace elimpcl {

/// Seeded random source with an algorithmically fixed generator
/// (splitmix64-seeded xoshiro256**), so the same seed yields the same
/// draw sequence on every platform. Single-owner: not safe to share
/// across threads.
class RandomSource {
 public:
  static constexpr const char* kAlgorithmId = "splitmix64-seeded xoshiro256**";

  explicit RandomSource(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform();

  /// Uniform in (0, 1]; safe as a log() argument.
  double uniform_pos();

  /// Standard normal via the polar (Marsaglia) method.
  double normal();

  /// Gamma(alpha, 1) via Marsaglia-Tsang; alpha < 1 uses the boosting
  /// identity Gamma(a) = Gamma(a+1) * U^{1/a}. alpha <= 0 is a usage error.
  double gamma(double alpha);

  /// log of a Gamma(alpha, 1) draw; stays finite where the draw itself
  /// would underflow (alpha << 1).
  double log_gamma_draw(double alpha);

  /// Unbiased integer in [0, n), n >= 1.
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<int> permutation(int n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
};

/// One draw from the symmetric Beta(alpha, alpha) distribution via two
/// Gamma(alpha) draws. Computed in log space for alpha < 1 so the
/// near-{0,1} concentration survives underflow. alpha <= 0 is a usage error.
double sample_beta(double alpha, RandomSource& rng);

}  // namespace elimpcl
