#pragma once

#include <cstdint>
#include <random>

namespace lostsales {

// splitmix64, used both as a seed scrambler and to derive per-replication
// stream seeds from a master seed. Stream i is seeded by
// splitmix64(master + GOLDEN * (i + 1)); substreams add a salt in the high
// bits so that e.g. a policy's internal Monte Carlo draws never touch the
// demand stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                 std::uint64_t salt = 0) {
  std::uint64_t x = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  x ^= splitmix64(salt + 0x517cc1b727220a95ULL);
  return splitmix64(x);
}

// Single-owner random stream. mt19937_64 output is fully specified by the
// standard and the uniform mapping below avoids std::uniform_real_distribution,
// whose draw sequence is implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform on [0, 1)
  double next_uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // uniform on (0, 1], safe for log()
  double next_uniform_pos() { return 1.0 - next_uniform(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace lostsales
