#pragma once

#include <cstdint>
#include <string_view>

namespace tega {

// splitmix64; fully specified so every platform draws the same stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

  // Box-Muller, one value per call (the pair's second half is discarded to
  // keep the stream position independent of call parity).
  double gaussian();

 private:
  std::uint64_t state_;
};

// FNV-1a over the concatenated parts; used to derive independent substreams.
std::uint64_t hash_combine(std::uint64_t seed, std::string_view tag);
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);

}  // namespace tega
