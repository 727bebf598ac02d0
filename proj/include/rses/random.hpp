#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

namespace rses::rng {

/// SplitMix64 finaliser. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Folds an ordered tuple of words into one stream key. Order matters:
/// derive_key({a, b}) != derive_key({b, a}) in general.
std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) noexcept;

/// Counter-based random stream: the i-th raw word is mix64(key + (i + 1) * gamma),
/// so any position can be reached without generating the prefix and two
/// streams with the same key are bit-identical.
class Stream {
 public:
  explicit Stream(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  /// Uniform on (lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal draw (256-layer ziggurat).
  double normal() noexcept;
  void fill_normal(std::span<double> out) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }
  void seek(std::uint64_t position) noexcept { counter_ = position; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rses::rng
