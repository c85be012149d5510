#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace rosplab {

namespace detail {

inline constexpr std::uint64_t splitmix64_step(std::uint64_t& state) noexcept {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  std::uint64_t s = z;
  return splitmix64_step(s);
}

}  // namespace detail

/// Portable uniform stream (splitmix64). The sequence depends only on the
/// key, never on the platform's <random> distributions, so every derived
/// variate is bit-reproducible.
///
/// Streams are keyed by a master seed plus a path of substream indices, e.g.
/// `RandomStream(seed, {outer, path})`. A stream is owned by one worker.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) noexcept : state_(detail::mix64(seed)) {}

  RandomStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept
      : state_(detail::mix64(seed)) {
    for (std::uint64_t id : path) {
      state_ = detail::mix64(state_ ^ detail::mix64(id + 0x632BE59BD9B4E019ull));
    }
  }

  std::uint64_t next_u64() noexcept { return detail::splitmix64_step(state_); }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace rosplab
