#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cs {

/// Input data is malformed or inconsistent. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax error at a known position of a text stream.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : DataError(what + " (at byte " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Caller passed arguments that violate an operation's preconditions.
/// Maps to CLI exit code 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Collects non-fatal warnings raised while processing.
class Diagnostics {
 public:
  void warn(std::string message) { warnings_.push_back(std::move(message)); }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  bool empty() const noexcept { return warnings_.empty(); }
  void clear() noexcept { warnings_.clear(); }

 private:
  std::vector<std::string> warnings_;
};

inline void warn(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->warn(std::move(message));
}

/// Binary label. Positive = influential.
enum class Label : int { kNonInfluential = 0, kInfluential = 1 };

inline int to_int(Label l) noexcept { return static_cast<int>(l); }

/// Seed for a named pipeline component, derived from the master seed.
/// FNV-1a of the name, mixed with the seed through splitmix64.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view component);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view component, std::uint64_t index);

/// mt19937_64 with platform-independent sampling helpers. The standard
/// distributions are implementation-defined, so they are not used anywhere
/// reproducibility matters.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  /// Uniform in [0, 1].
  double unit();
  /// Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// --- CSV -------------------------------------------------------------------

/// Quotes a field if it contains separators, quotes or line breaks.
std::string csv_escape(std::string_view field);

/// Splits one CSV record. Supports double-quoted fields with "" escapes.
std::vector<std::string> csv_split(std::string_view line);

// --- text ------------------------------------------------------------------

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Replaces invalid UTF-8 sequences with U+FFFD. Returns true if any were found.
bool sanitize_utf8(std::string& s);

std::string base64_encode(std::string_view bytes);
/// Throws DataError on characters outside the base64 alphabet.
std::string base64_decode(std::string_view text);

// --- files -----------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Formats a double with the shortest representation that round-trips.
std::string format_double(double v);

}  // namespace cs
