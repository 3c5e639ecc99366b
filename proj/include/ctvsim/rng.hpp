#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace ctvsim {

/// SplitMix64 finalizer. Used as a counter-based generator: the n-th draw of a
/// stream is mix64(seed ^ n), so results never depend on call interleaving
/// between unrelated streams.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a list of salts.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> salts) noexcept {
  std::uint64_t h = mix64(seed);
  for (auto s : salts) h = mix64(h ^ mix64(s + 0x632be59bd9b4e019ULL));
  return h;
}

/// FNV-1a; stable across platforms, unlike std::hash.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ctvsim
