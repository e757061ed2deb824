#pragma once

#include <cmath>
#include <cstdint>

namespace phasecorr {

// Splittable deterministic generator (xoshiro256++ core, splitmix64 seeding).
// Every stochastic operation takes one of these explicitly, so runs are
// reproducible bit-for-bit at a fixed seed and call count. std engines are
// avoided because std::normal_distribution is not identical across stdlibs.
class RngState {
 public:
  explicit RngState(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  // Standard normal (Marsaglia polar, caches the spare deviate).
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  // Derive an independent stream; does not consume state from *this.
  [[nodiscard]] RngState split(std::uint64_t stream) const noexcept {
    RngState out(0);
    std::uint64_t x = stream ^ 0x9e3779b97f4a7c15ULL;
    for (int i = 0; i < 4; ++i) {
      std::uint64_t m = x;
      out.s_[i] = s_[i] ^ splitmix64(m);
      x = m + 0x632be59bd9b4e019ULL;
    }
    return out;
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static std::uint64_t rotl(std::uint64_t v, int k) noexcept {
    return (v << k) | (v >> (64 - k));
  }

  std::uint64_t s_[4] = {};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace phasecorr
