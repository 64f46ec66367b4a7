#include <catch2/catch.hpp>

#include <cmath>
#include <set>

#include "spenc/rng.hpp"

using spenc::CounterRng;

TEST_CASE("philox4x32-10 known-answer vectors") {
  // Reference vectors from the Random123 distribution.
  auto out = CounterRng::philox4x32_10({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);

  out = CounterRng::philox4x32_10(
      {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
      {0xffffffffu, 0xffffffffu});
  CHECK(out[0] == 0x408f276du);
  CHECK(out[1] == 0x41c83b0eu);
  CHECK(out[2] == 0xa20bc7c6u);
  CHECK(out[3] == 0x6d5451fdu);

  out = CounterRng::philox4x32_10(
      {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
      {0xa4093822u, 0x299f31d0u});
  CHECK(out[0] == 0xd16cfe09u);
  CHECK(out[1] == 0x94fdccebu);
  CHECK(out[2] == 0x5001e420u);
  CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("streams are reproducible and distinct") {
  CounterRng a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
  }
  bool any_diff = false;
  CounterRng a2(42, 7);
  for (int i = 0; i < 100; ++i) any_diff |= (a2.next_u64() != c.next_u64());
  CHECK(any_diff);
}

TEST_CASE("uniform ranges") {
  CounterRng rng(1, 0);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.uniform_pos();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("normal moments") {
  CounterRng rng(3, 1);
  const long n = 200000;
  double s = 0, s2 = 0;
  for (long i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(var == Approx(1.0).margin(0.02));
}

TEST_CASE("poisson sampler: edge cases and moments") {
  CounterRng rng(9, 2);
  CHECK(rng.poisson(0.0) == 0);
  CHECK_THROWS_AS(rng.poisson(-1.0), spenc::ValidationError);

  // Inversion regime.
  {
    const double rate = 2.5;
    const long n = 100000;
    double s = 0, s2 = 0;
    for (long i = 0; i < n; ++i) {
      const double x = static_cast<double>(rng.poisson(rate));
      s += x;
      s2 += x * x;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(mean == Approx(rate).margin(5.0 * std::sqrt(rate / n)));
    CHECK(var == Approx(rate).epsilon(0.05));
  }
  // Rejection regime.
  {
    const double rate = 47.0;
    const long n = 100000;
    double s = 0, s2 = 0;
    long mn = 1 << 30;
    for (long i = 0; i < n; ++i) {
      const long k = rng.poisson(rate);
      mn = std::min(mn, k);
      const double x = static_cast<double>(k);
      s += x;
      s2 += x * x;
    }
    CHECK(mn >= 0);
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(mean == Approx(rate).margin(5.0 * std::sqrt(rate / n)));
    CHECK(var == Approx(rate).epsilon(0.05));
  }
}

TEST_CASE("shuffle is a seeded permutation") {
  std::vector<int> v(50), w(50);
  for (int i = 0; i < 50; ++i) v[i] = w[i] = i;
  CounterRng a(5, 0), b(5, 0);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  CHECK(std::set<int>(v.begin(), v.end()).size() == 50);
}
