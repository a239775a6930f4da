#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace rispricing {

/// Stream identifiers for keyed random sub-streams. Adding a class never
/// perturbs the draws of an existing one.
enum class StreamClass : std::uint64_t {
  users = 1,
  direct_link = 2,
  bs_ris_link = 3,
  ris_user_link = 4,
  prices = 5,
  follower_restart = 6,
  oracle = 7,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives a 64-bit stream seed from (seed, class, indices...).
std::uint64_t derive_seed(std::uint64_t seed, StreamClass cls,
                          std::initializer_list<std::uint64_t> indices = {});

/// Deterministic generator for one keyed sub-stream.
///
/// Wraps std::mt19937_64 (whose output sequence is fixed by the standard)
/// and converts to uniforms / Gaussians by hand so that draws are identical
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, StreamClass cls,
      std::initializer_list<std::uint64_t> indices = {})
      : engine_(derive_seed(seed, cls, indices)) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double standard_normal();
  /// Circularly-symmetric complex Gaussian with unit variance.
  std::complex<double> complex_gaussian();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rispricing
