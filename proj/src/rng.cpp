#include "phaseret/rng.hpp"

namespace phaseret {

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index) noexcept {
  // FNV-1a over the label, then mixed with parent and index.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : label) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = mix64(parent + 0x9e3779b97f4a7c15ULL);
  z = mix64(z ^ h);
  z = mix64(z + index * 0xd1b54a32d192ed03ULL);
  return z;
}

}  // namespace phaseret
