#pragma once

#include <cstdint>

namespace omd {

/// splitmix64 step; used only to expand a 64-bit seed into generator state.
std::uint64_t splitmix64(std::uint64_t& state);

/// xoshiro256** (Blackman and Vigna).  State words s0..s3 are filled from the
/// seed by four successive splitmix64 calls.  Update:
///   result = rotl(s1 * 5, 7) * 9
///   t = s1 << 17
///   s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t; s3 = rotl(s3, 45)
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();
  /// (next() >> 11) * 2^-53, in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal by the Marsaglia polar method; the spare value is cached.
  double normal();
  /// Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n);
  /// +1 or -1 with equal probability.
  double sign();

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace omd
