#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

namespace vlselect {

// 64-bit FNV-1a. Stable across platforms and runs, which std::hash is not;
// digests and cache keys end up on disk.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  Fnv1a64& update(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= bytes[i];
      state_ *= kPrime;
    }
    return *this;
  }

  Fnv1a64& update(std::string_view s) {
    // length prefix keeps ("ab","c") and ("a","bc") apart
    update_pod(static_cast<std::uint64_t>(s.size()));
    return update(s.data(), s.size());
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  Fnv1a64& update_pod(T value) {
    return update(&value, sizeof(value));
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  Fnv1a64& update_span(std::span<const T> values) {
    update_pod(static_cast<std::uint64_t>(values.size()));
    return update(values.data(), values.size_bytes());
  }

  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = kOffset;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  return Fnv1a64{}.update(s.data(), s.size()).digest();
}

// Lowercase, zero-padded, 16 characters.
std::string to_hex(std::uint64_t value);

}  // namespace vlselect
