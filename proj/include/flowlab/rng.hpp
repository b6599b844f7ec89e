#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace flowlab {

// SplitMix64 (Steele/Lea/Flood). Chosen because the integer stream is fully
// specified by the recurrence below, so seeded node sets are identical on
// every platform:
//   state += 0x9E3779B97F4A7C15
//   z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9
//   z = (z ^ z>>27) * 0x94D049BB133111EB; return z ^ z>>31
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), top 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes two uniforms.
  double gaussian();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Sub-seed derivation: split_seed(master, purpose) feeds
// master XOR fnv1a64(purpose) through one SplitMix64 step. Changing one
// stream's consumption (e.g. the particle count) never perturbs another.
std::uint64_t split_seed(std::uint64_t master, std::string_view purpose);

// count i.i.d. N(0, I_dim) points, flat layout [point][coordinate],
// filled in index order.
std::vector<double> sample_gaussian(std::size_t count, int dim,
                                    std::uint64_t seed);

}  // namespace flowlab
