#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shipgate {

inline constexpr std::string_view kToolVersion = "0.1.0";

// ============================================================================
// Errors
// ============================================================================

enum class ErrorCategory {
  invalid_argument,  // bad values passed to an operation
  io,                // file open/read/write failures
  format,            // malformed header or record structure
  truncated,         // payload shorter than declared
  checksum,          // CRC mismatch
  version,           // unsupported container version
  validation,        // graph or data violates an invariant
};

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::invalid_argument: return "invalid_argument";
    case ErrorCategory::io: return "io";
    case ErrorCategory::format: return "format";
    case ErrorCategory::truncated: return "truncated";
    case ErrorCategory::checksum: return "checksum";
    case ErrorCategory::version: return "version";
    case ErrorCategory::validation: return "validation";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

// ============================================================================
// Rounding
// ============================================================================

// Round to nearest, ties to even. Every real-to-integer conversion in the
// library goes through here so results are identical across platforms.
inline std::int64_t round_half_even(double x) {
  const double f = std::floor(x);
  const double frac = x - f;
  const auto lo = static_cast<std::int64_t>(f);
  if (frac > 0.5) return lo + 1;
  if (frac < 0.5) return lo;
  return (lo % 2 == 0) ? lo : lo + 1;
}

// ============================================================================
// Deterministic RNG
// ============================================================================

// mt19937_64's raw output sequence is pinned by the standard; the
// distribution helpers are hand-rolled because std:: distributions are
// implementation-defined and differ between libstdc++ and libc++.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, n). Modulo bias is negligible for the ranges used here.
  std::uint64_t next_below(std::uint64_t n) { return gen_() % n; }

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    next_below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Uniform real in [0, 1).
  double next_real() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool next_bool(double p) { return next_real() < p; }

 private:
  std::mt19937_64 gen_;
};

// ============================================================================
// Hashing
// ============================================================================

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// FNV-1a over the string followed by the little-endian bytes of `salt`.
inline std::uint64_t fnv1a64_salted(std::string_view bytes, std::uint64_t salt) {
  std::uint64_t h = fnv1a64(bytes);
  for (int i = 0; i < 8; ++i) {
    h ^= static_cast<unsigned char>(salt >> (8 * i));
    h *= 1099511628211ull;
  }
  return h;
}

// CRC-32 (IEEE 802.3), table driven.
inline std::uint32_t crc32(const unsigned char* data, std::size_t n,
                           std::uint32_t crc = 0) {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc = ~crc;
  for (std::size_t i = 0; i < n; ++i)
    crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  return ~crc;
}

inline std::uint32_t crc32(std::string_view bytes) {
  return crc32(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());
}

// ============================================================================
// Small file / CSV helpers
// ============================================================================

inline std::string read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_binary_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::io, "cannot open " + path + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorCategory::io, "short write to " + path);
}

// Splits one CSV line. Handles double-quoted fields with embedded commas and
// doubled quotes; strips a trailing '\r'.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

// Lowercases and drops '_', ' ' so that "ImageId" and "image_id" compare equal.
inline std::string normalize_column_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == '_' || c == ' ' || c == '\r') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace shipgate
