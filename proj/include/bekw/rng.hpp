#pragma once

// Deterministic, worker-count-invariant random number plumbing.  Each Monte
// Carlo replicate gets its own generator seeded by a stateless mix of
// (master_seed, replicate_index), so scheduling order cannot matter.

#include <cstdint>
#include <random>

namespace bekw {

namespace detail {
// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return detail::mix64(detail::mix64(master) ^ detail::mix64(index + 0x632BE59BD9B4E019ULL));
}

class RngState {
 public:
  explicit RngState(std::uint64_t seed) : eng_(seed) {}

  // Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline RngState make_replicate_rng(std::uint64_t master, std::uint64_t index) {
  return RngState(derive_seed(master, index));
}

}  // namespace bekw
