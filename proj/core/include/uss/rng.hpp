//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace uss {

/// SplitMix64 step; also used to derive independent seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a decorrelated child seed from a base seed and a stream index.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  std::uint64_t a = splitmix64(s);
  return splitmix64(s) ^ a;
}

/// xoshiro256** by Blackman and Vigna. Small serializable state, satisfies
/// UniformRandomBitGenerator. Helper draws are implemented here so results
/// are identical across platforms and standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ULL; }

  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64() {
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

  /// Uniform double in [0, 1), 53 random bits.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound); bound must be nonzero. Debiased via
  /// 128-bit multiply-shift rejection (Lemire).
  std::uint64_t next_below(std::uint64_t bound) {
    std::uint64_t x = next_u64();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    std::uint64_t lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<unsigned __int128>(x) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Bernoulli draw with success probability p (clamped to [0, 1]).
  bool chance(double p) { return next_double() < p; }

  /// Geometric on {1, 2, ...} with success probability p in (0, 1].
  std::uint64_t geometric(double p) {
    if (p >= 1.0) return 1;
    // Inversion: ceil(ln(1-U)/ln(1-p)) with 1-U in (0, 1].
    double u = next_double();
    double g = std::ceil(std::log1p(-u) / std::log1p(-p));
    if (g < 1.0) return 1;
    return static_cast<std::uint64_t>(g);
  }

  std::array<std::uint64_t, 4> state() const { return state_; }
  void restore(const std::array<std::uint64_t, 4>& s) { state_ = s; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace uss
