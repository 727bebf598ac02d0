#include "rses/random.hpp"

#include <array>
#include <cmath>

namespace rses::rng {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// 256-layer ziggurat for the unnormalised density exp(-x^2/2).
constexpr int kLayers = 256;
constexpr double kTailStart = 3.6541528853610088;
constexpr double kLayerArea = 0.00492867323399;

struct ZigguratTables {
  std::array<double, kLayers + 1> x{};
  std::array<double, kLayers + 1> f{};

  ZigguratTables() {
    auto density = [](double v) { return std::exp(-0.5 * v * v); };
    x[0] = kLayerArea / density(kTailStart);
    x[1] = kTailStart;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kLayerArea / x[i - 1] + density(x[i - 1])));
    }
    x[kLayers] = 0.0;
    for (int i = 0; i <= kLayers; ++i) f[i] = density(x[i]);
  }
};

const ZigguratTables& tables() {
  static const ZigguratTables t;
  return t;
}

}  // namespace

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p + kGamma));
  return h;
}

std::uint64_t Stream::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double Stream::uniform() noexcept {
  // (bits + 0.5) / 2^53 never hits 0 or 1.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal() noexcept {
  const ZigguratTables& t = tables();
  for (;;) {
    const std::uint64_t bits = next_u64();
    const int layer = static_cast<int>(bits & 0xFF);
    const double u = 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
    const double z = u * t.x[layer];
    if (std::abs(z) < t.x[layer + 1]) return z;
    if (layer == 0) {
      double a = 0.0;
      double b = 0.0;
      do {
        a = -std::log(uniform()) / kTailStart;
        b = -std::log(uniform());
      } while (2.0 * b < a * a);
      return u < 0.0 ? -(kTailStart + a) : kTailStart + a;
    }
    const double y = t.f[layer + 1] + (t.f[layer] - t.f[layer + 1]) * uniform();
    if (y < std::exp(-0.5 * z * z)) return z;
  }
}

void Stream::fill_normal(std::span<double> out) noexcept {
  for (double& v : out) v = normal();
}

}  // namespace rses::rng
