#pragma once

#include <cstdint>
#include <initializer_list>

namespace tae {

// SplitMix64 finalizer. Used both as the PRNG step and as the seed mixer so
// that derived streams are well separated.
inline uint64_t mix_bits(uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Combines a seed with one more word (order-sensitive).
inline uint64_t mix_seed(uint64_t h, uint64_t v) {
  return mix_bits(h + 0x9E3779B97F4A7C15ULL + v);
}

inline uint64_t mix_seed(std::initializer_list<uint64_t> words) {
  uint64_t h = 0x243F6A8885A308D3ULL;
  for (uint64_t w : words) h = mix_seed(h, w);
  return h;
}

// Deterministic 64-bit generator (SplitMix64). All distributions are
// hand-rolled so results do not depend on the standard library
// implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix_bits(state_);
  }

  // Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + int(below(uint64_t(hi - lo + 1)));
  }

  bool coin() { return (next_u64() >> 63) != 0; }

 private:
  uint64_t state_;
};

// Stream namespaces for seed derivation. Collection and evaluation draw from
// disjoint spaces by construction.
enum class SeedSpace : uint64_t {
  world = 0x01,
  collect = 0x02,
  eval = 0x03,
  train_init = 0x04,
  train_sampler = 0x05,
};

inline uint64_t episode_seed(uint64_t master, SeedSpace space, uint64_t round_id,
                             uint64_t task_ordinal, uint64_t episode_ordinal) {
  return mix_seed({master, uint64_t(space), round_id, task_ordinal, episode_ordinal});
}

}  // namespace tae
