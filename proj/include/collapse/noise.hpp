#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>

#include <boost/random/normal_distribution.hpp>

namespace collapse {

/// One step of the splitmix64 sequence; advances `state`.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stateless 64-bit mix of two words. Used to derive sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s = h ^ (b * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  return splitmix64(s);
}

/// Wiener increments for one trajectory.
///
/// The generator is xoshiro256** keyed by (seed, stream_index) through splitmix64,
/// so each trajectory owns a stream that does not depend on execution order.
/// Normal variates use the Boost.Random ziggurat, whose output (unlike
/// std::normal_distribution) does not depend on the standard library in use.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t stream_index) noexcept
      : seed_(seed), stream_index_(stream_index) {
    std::uint64_t sm = mix_seed(seed, stream_index);
    for (auto& w : state_) w = splitmix64(sm);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = std::rotl(state_[3], 45);
    return result;
  }

  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept { return next_u64(); }

  double standard_normal() { return normal_(*this); }

  /// One draw from Normal(0, dt).
  double gaussian_increment(double dt) { return std::sqrt(dt) * standard_normal(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_index_;
  std::array<std::uint64_t, 4> state_{};
  boost::random::normal_distribution<double> normal_{};
};

}  // namespace collapse
