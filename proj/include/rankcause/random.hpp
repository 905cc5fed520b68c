#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace rankcause {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named sub-stream seed: independent of any other purpose tag, so turning
// one consumer on or off never shifts the draws of another.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::initializer_list<std::uint64_t> coords = {}) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a offset
  for (char c : purpose) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t s = splitmix64(master ^ splitmix64(h));
  for (std::uint64_t c : coords) s = splitmix64(s ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  return s;
}

inline Rng make_rng(std::uint64_t master, std::string_view purpose,
                    std::initializer_list<std::uint64_t> coords = {}) {
  return Rng(derive_seed(master, purpose, coords));
}

}  // namespace rankcause
