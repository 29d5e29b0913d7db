#pragma once

#include <cstdint>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ifsim {

// Simulation time in integer microseconds. No floating-point time anywhere.
using Micros = std::uint64_t;

// Logical time: the persisted context-switch counter.
using Timestamp = std::uint64_t;

using TaskUid = std::uint64_t;   // one per task instance, never reused
using RecordId = std::uint64_t;  // one per logical task (survives recreation)
using ObjectId = std::uint32_t;
using AllocId = std::uint64_t;

using Bytes = std::vector<std::uint8_t>;

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct LogicError : std::logic_error {
  explicit LogicError(const std::string& msg) : std::logic_error(msg) {}
};

// Timestamp range within which a task can be viewed as executed in isolation.
// begin > end encodes the empty interval ("not serializable").
struct ValidityInterval {
  Timestamp begin = 0;
  Timestamp end = 0;

  bool valid() const { return begin <= end; }
  bool operator==(const ValidityInterval&) const = default;
};

inline std::string to_string(const ValidityInterval& vi) {
  std::ostringstream os;
  os << '[' << vi.begin << ',' << vi.end << ']';
  return os.str();
}

// FNV-1a, used for event-log digests and deterministic payload bytes.
inline std::uint64_t fnv1a_init() { return 14695981039346656037ULL; }

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
  return fnv1a(h, s.data(), s.size());
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(fnv1a_init(), s); }

// splitmix64; expands a seed into deterministic payload bytes.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Bytes deterministic_bytes(std::uint64_t seed, std::size_t n) {
  Bytes out(n);
  std::uint64_t s = seed;
  for (std::size_t i = 0; i < n; i += 8) {
    std::uint64_t w = splitmix64(s);
    for (std::size_t j = 0; j < 8 && i + j < n; ++j) {
      out[i + j] = static_cast<std::uint8_t>(w >> (8 * j));
    }
  }
  return out;
}

inline std::string to_hex(const Bytes& b) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(b.size() * 2);
  for (std::uint8_t c : b) {
    s.push_back(digits[c >> 4]);
    s.push_back(digits[c & 0xF]);
  }
  return s;
}

inline Bytes from_hex(const std::string& s) {
  if (s.size() % 2 != 0) throw ConfigError("hex string has odd length: " + s);
  auto nibble = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ConfigError(std::string("invalid hex digit '") + c + "'");
  };
  Bytes out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>((nibble(s[2 * i]) << 4) | nibble(s[2 * i + 1]));
  }
  return out;
}

}  // namespace ifsim
