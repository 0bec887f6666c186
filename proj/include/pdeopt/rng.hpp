#pragma once

#include <cstdint>

namespace pdeopt {

// SplitMix64 generator (Steele/Lea/Flood). The state advances by a fixed odd
// increment and the output is a bijective mix of the state, so the stream is
// a pure function of the 64-bit seed and identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  std::uint64_t state_;
};

// Derives a child seed for stream `stream` of a master seed. Children of
// distinct streams start in well-separated SplitMix64 states.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  Rng mix(master ^ (0xA0761D6478BD642Full * (stream + 1)));
  return mix.next_u64();
}

}  // namespace pdeopt
