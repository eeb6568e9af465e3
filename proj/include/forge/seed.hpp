#pragma once

#include <cstdint>
#include <string_view>

namespace forge {

// 64-bit FNV-1a over `text`, starting from a basis perturbed by `seed`.
// Used to give every scene or source its own stable RNG stream.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull ^ (seed * 0x9e3779b97f4a7c15ull);
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace forge
