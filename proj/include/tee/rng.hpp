#pragma once

#include <cstdint>
#include <random>

namespace tee {

// splitmix64; used to fan a single run seed out into independent per-module
// and per-frame streams without correlated low bits.
inline uint64_t split_mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  return split_mix(base ^ split_mix(stream + 0x632be59bd9b4e019ull));
}

inline std::mt19937_64 make_rng(uint64_t base, uint64_t stream) {
  return std::mt19937_64(derive_seed(base, stream));
}

}  // namespace tee
