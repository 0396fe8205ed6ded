#pragma once

// Deterministic random streams.
//
// Every use site (a block of base randomness, a CV fold assignment, a model
// initialisation, a ranking tie-break) owns its own stream whose seed is a
// hash of the master seed and a list of integer tags. Streams never share
// state, so results do not depend on execution order or thread count.
//
// Seed-to-value mapping (frozen, covered by golden tests):
//   key    = derive_seed(master, {tags...})          SplitMix64 chain
//   engine = xoshiro256** seeded from key via four SplitMix64 outputs
//   uniform()  = (next() >> 11) * 2^-53              in [0, 1)
//   gaussian() = Box-Muller on (1 - u1, u2), cosine branch first, the sine
//                branch is cached and returned by the following call
//   bernoulli(p) = uniform() < p

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <utility>

namespace fairsim {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Hash a master seed and an ordered list of tags into a stream key.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = splitmix64(master ^ 0x6a09e667f3bcc908ULL);
  std::uint64_t position = 0;
  for (std::uint64_t t : tags) {
    h = splitmix64(h ^ splitmix64(t + 0x3c6ef372fe94f82bULL * ++position));
  }
  return h;
}

/// Bit pattern of a double, with -0.0 folded onto +0.0, for use as a hash tag.
inline std::uint64_t real_tag(double v) noexcept {
  if (v == 0.0) v = 0.0;
  return std::bit_cast<std::uint64_t>(v);
}

/// xoshiro256** 1.0 (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256ss {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256ss(std::uint64_t seed) noexcept {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = s;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  static Xoshiro256ss from_state(const std::array<std::uint64_t, 4>& state) noexcept {
    Xoshiro256ss g(0);
    g.state_ = state;
    return g;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
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

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_{};
};

/// A single-owner random stream with portable distributions.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) noexcept : engine_(key) {}
  RandomStream(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept
      : engine_(derive_seed(master, tags)) {}

  std::uint64_t next_u64() noexcept { return engine_(); }

  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double gaussian() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Uniform integer in [0, bound) without modulo bias (Lemire).
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    __uint128_t m = static_cast<__uint128_t>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<__uint128_t>(engine_()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Fisher-Yates shuffle; std::shuffle is implementation-defined.
  template <class T>
  void shuffle(std::span<T> values) noexcept {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(values[i - 1], values[j]);
    }
  }

 private:
  Xoshiro256ss engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream tags. Values are part of the frozen seed mapping.
namespace stream {
inline constexpr std::uint64_t kTrain = 1;
inline constexpr std::uint64_t kTest = 2;
inline constexpr std::uint64_t kBlockX = 11;
inline constexpr std::uint64_t kBlockY = 12;
inline constexpr std::uint64_t kBlockAux = 13;
inline constexpr std::uint64_t kBlockMix = 14;
inline constexpr std::uint64_t kTieBreak = 15;
inline constexpr std::uint64_t kModel = 21;
inline constexpr std::uint64_t kFolds = 22;
inline constexpr std::uint64_t kEvaluation = 23;
inline constexpr std::uint64_t kCalibration = 24;
}  // namespace stream

}  // namespace fairsim
