#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string_view>

namespace adnoise {

/// 64-bit FNV-1a, used for provenance and config hashes.
class Fnv1a {
 public:
  void add_bytes(std::span<const unsigned char> bytes) {
    for (unsigned char b : bytes) {
      state_ ^= b;
      state_ *= 0x100000001b3ULL;
    }
  }
  void add(std::string_view s) {
    add_bytes({reinterpret_cast<const unsigned char*>(s.data()), s.size()});
  }
  void add(double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    add(bits);
  }
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      unsigned char b = static_cast<unsigned char>(v >> (8 * i));
      add_bytes({&b, 1});
    }
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace adnoise
