#ifndef DSDST_HASH_H_
#define DSDST_HASH_H_

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

namespace dsdst {

// 64-bit FNV-1a. Used for vocabulary, schema and parameter fingerprints that
// are stored in checkpoints, so it must not depend on std::hash.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes) {
    for (std::byte b : bytes) {
      state_ ^= static_cast<std::uint64_t>(b);
      state_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view text) { update(std::as_bytes(std::span(text.data(), text.size()))); }
  template <typename T>
  void update_pod(const T& value) {
    update(std::as_bytes(std::span(&value, 1)));
  }

  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

}  // namespace dsdst

#endif  // DSDST_HASH_H_
