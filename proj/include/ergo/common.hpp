#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ergo {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class for everything the engine can throw.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad configuration: missing profile, unknown dimension, invalid config key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Structurally invalid input data. Collects every violation found so the
/// caller sees the full list, not just the first.
class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}
  explicit SchemaError(const std::string& single)
      : SchemaError(std::vector<std::string>{single}) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "schema validation failed:";
    for (const auto& s : v) {
      out += "\n  - ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> violations_;
};

/// Numerical failure during penalty evaluation (non-finite pose, NaN term).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// A scene that cannot be placed at all (asset larger than the room, or
/// every optimization candidate failed).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Remote inference failure. `retryable` distinguishes transport problems
/// from permanent protocol errors.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, bool retryable, std::string asset_id = "")
      : Error(what), retryable_(retryable), asset_id_(std::move(asset_id)) {}

  bool retryable() const { return retryable_; }
  const std::string& asset_id() const { return asset_id_; }

 private:
  bool retryable_;
  std::string asset_id_;
};

// ---------------------------------------------------------------------------
// 2D vector
// ---------------------------------------------------------------------------

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  /// z-component of the 3D cross product.
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
  /// Counterclockwise rotation by 90 degrees.
  Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }

inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Normalizes an angle into [0, 2*pi).
inline double normalize_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // fmod can return exactly 2*pi after the adjustment when a was a tiny
  // negative number.
  if (a >= kTwoPi) a = 0.0;
  return a;
}

// ---------------------------------------------------------------------------
// Deterministic randomness
// ---------------------------------------------------------------------------

/// All randomness in the engine flows through this wrapper. std::mt19937_64
/// is seeded directly; the uniform draws below avoid std::uniform_*
/// distributions because their output is implementation-defined, which would
/// break byte-identical reproducibility of committed golden files.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi). Degenerate interval returns lo exactly.
  double uniform(double lo, double hi) {
    if (hi <= lo) return lo;
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) { return n == 0 ? 0 : gen_() % n; }

 private:
  std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Content hashing
// ---------------------------------------------------------------------------

/// FNV-1a, 64-bit. Stable across platforms; used for manifest content hashes.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string fnv1a_hex(std::string_view data) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a(data);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace ergo
