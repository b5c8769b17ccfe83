#pragma once

// Philox4x64-10 counter-based generator (Salmon et al., SC'11). A stream is
// keyed by (seed, component), so every component draws the same numbers no
// matter which thread simulates it.

#include <array>
#include <cmath>
#include <cstdint>

namespace refrac::rng {

using u64 = std::uint64_t;
using Block = std::array<u64, 4>;
using Key = std::array<u64, 2>;

inline Block philox4x64(Block ctr, Key key) {
  constexpr u64 kM0 = 0xD2E7470EE14C6C93ULL;
  constexpr u64 kM1 = 0xCA5A826395121157ULL;
  constexpr u64 kW0 = 0x9E3779B97F4A7C15ULL;
  constexpr u64 kW1 = 0xBB67AE8584CAA73BULL;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const unsigned __int128 p0 = static_cast<unsigned __int128>(kM0) * ctr[0];
    const unsigned __int128 p1 = static_cast<unsigned __int128>(kM1) * ctr[2];
    const auto hi0 = static_cast<u64>(p0 >> 64), lo0 = static_cast<u64>(p0);
    const auto hi1 = static_cast<u64>(p1 >> 64), lo1 = static_cast<u64>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

class Stream {
 public:
  Stream(u64 seed, u64 component) : key_{seed, component} {}

  u64 next_u64() {
    if (pos_ == 4) {
      buf_ = philox4x64({block_++, 0, 0, 0}, key_);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  // Uniform on (0, 1), never 0 or 1.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    return r * std::cos(6.283185307179586 * uniform());
  }

  // Gamma(shape, rate) for shape >= 1 (Marsaglia-Tsang).
  double gamma(double shape, double rate) {
    if (shape == 1.0) return exponential(rate);
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      const double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v / rate;
    }
  }

 private:
  Key key_;
  u64 block_ = 0;
  Block buf_{};
  int pos_ = 4;
};

}  // namespace refrac::rng
