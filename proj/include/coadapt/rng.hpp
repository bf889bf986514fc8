#pragma once

#include <cstdint>
#include <initializer_list>

namespace coadapt {

/// SplitMix64 finalizer; used to derive independent seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = mix_seed(base);
  for (auto k : keys) s = mix_seed(s ^ mix_seed(k + 0x632be59bd9b4e019ULL));
  return s;
}

}  // namespace coadapt
