#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "spenc/errors.hpp"

namespace spenc {

// Counter-based generator: Philox4x32-10 (Salmon et al., Random123 family).
// The 64-bit seed forms the key; the 128-bit counter is split into a 64-bit
// stream id (high lanes) and a 64-bit block position (low lanes), giving
// 2^64 independent streams of 2^64 blocks each. Outputs are reproducible
// across platforms and independent of evaluation order, which is what makes
// per-row generation and common-random-number gradient checks exact.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static std::array<std::uint32_t, 4> philox4x32_10(
      std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

  std::uint64_t next_u64() {
    if (buffered_ == 0) {
      const std::array<std::uint32_t, 4> ctr = {
          static_cast<std::uint32_t>(block_),
          static_cast<std::uint32_t>(block_ >> 32),
          static_cast<std::uint32_t>(stream_),
          static_cast<std::uint32_t>(stream_ >> 32)};
      const auto out = philox4x32_10(ctr, key_);
      buf_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
      buf_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
      buffered_ = 2;
      ++block_;
    }
    return buf_[--buffered_];
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe under log().
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Unbiased integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t threshold = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x = next_u64();
    while (x >= threshold) x = next_u64();
    return x % n;
  }

  // Standard normal via Box-Muller; one spare value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(kTwoPi * u2);
    have_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

  double half_normal(double sd) { return std::abs(normal()) * sd; }

  // Poisson sampler: sequential inversion below rate 10, Hormann's PTRS
  // transformed rejection at and above. rate == 0 returns 0.
  long poisson(double rate) {
    if (rate < 0.0 || !std::isfinite(rate)) {
      throw ValidationError("poisson rate must be finite and >= 0");
    }
    if (rate == 0.0) return 0;
    if (rate < 10.0) return poisson_inversion(rate);
    return poisson_ptrs(rate);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  long poisson_inversion(double rate) {
    const double u = uniform();
    double p = std::exp(-rate);
    double cum = p;
    long k = 0;
    while (u > cum && k < 2000) {
      ++k;
      p *= rate / static_cast<double>(k);
      cum += p;
    }
    return k;
  }

  long poisson_ptrs(double rate) {
    const double b = 0.931 + 2.53 * std::sqrt(rate);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_rate = std::log(rate);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::abs(u);
      const double kf = std::floor((2.0 * a / us + b) * u + rate + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          kf * log_rate - rate - std::lgamma(kf + 1.0)) {
        return static_cast<long>(kf);
      }
    }
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::uint64_t buf_[2] = {0, 0};
  int buffered_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stream-id namespaces. Keeping purposes in the top byte means a single user
// seed never reuses a stream across generation, initialization, shuffling,
// gradient noise, and posterior sampling.
namespace streams {

constexpr std::uint64_t sim_row(long row) {
  return (1ull << 56) | static_cast<std::uint64_t>(row);
}
constexpr std::uint64_t sim_truth() { return 2ull << 56; }
constexpr std::uint64_t init() { return 3ull << 56; }
constexpr std::uint64_t shuffle(long epoch) {
  return (4ull << 56) | static_cast<std::uint64_t>(epoch);
}
constexpr std::uint64_t elbo(long step, long draw) {
  return (5ull << 56) | (static_cast<std::uint64_t>(step) << 8) |
         static_cast<std::uint64_t>(draw);
}
constexpr std::uint64_t posterior(long index) {
  return (6ull << 56) | static_cast<std::uint64_t>(index);
}
// Per-user representation noise: keyed by (step, draw, row) so minibatch
// partitions share common random numbers row by row.
constexpr std::uint64_t elbo_theta(long step, long draw, long row) {
  return (7ull << 56) | ((static_cast<std::uint64_t>(step) & 0x3FFFFFF) << 30) |
         ((static_cast<std::uint64_t>(draw) & 0x3F) << 24) |
         (static_cast<std::uint64_t>(row) & 0xFFFFFF);
}

}  // namespace streams

}  // namespace spenc
