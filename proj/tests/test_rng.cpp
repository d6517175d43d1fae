#include <cmath>
#include <set>
#include <stdexcept>

#include "bbmlab/rng.hpp"
#include "doctest.h"

using namespace bbmlab;

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST_CASE("philox4x32-10 known answers") {
  using philox::Counter;
  using philox::Key;
  CHECK(philox::philox4x32_10(Counter{0, 0, 0, 0}, Key{0, 0}) ==
        Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox::philox4x32_10(Counter{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                              Key{0xffffffff, 0xffffffff}) ==
        Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox::philox4x32_10(Counter{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                              Key{0xa4093822, 0x299f31d0}) ==
        Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter rng is a pure function of its coordinates") {
  const CounterRng a(42, 7);
  const CounterRng b(42, 7);
  CHECK(a.block(3, 1) == b.block(3, 1));
  CHECK(a.block(3, 1) != a.block(3, 2));
  CHECK(a.block(3, 1) != a.block(4, 1));
  CHECK(a.block(3, 1) != CounterRng(42, 8).block(3, 1));
}

TEST_CASE("uniforms stay strictly inside (0,1)") {
  CHECK(to_open_unit(0) > 0.0);
  CHECK(to_open_unit(~std::uint64_t{0}) < 1.0);
}

TEST_CASE("stream moments") {
  RngStream rng(123, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, se = 0;
  for (int i = 0; i < n; ++i) {
    su += rng.uniform();
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    se += rng.exponential(2.0);
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::fabs(sn / n) < 4.0 / std::sqrt(n));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(se / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("poisson sampler mean and variance") {
  for (double mean : {0.7, 4.0, 35.0}) {
    RngStream rng(9, static_cast<std::uint64_t>(mean * 10));
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(rng.poisson(mean));
      s += k;
      s2 += k * k;
    }
    const double m = s / n;
    const double var = s2 / n - m * m;
    CHECK(std::fabs(m - mean) < 4.0 * std::sqrt(mean / n));
    CHECK(var / mean == doctest::Approx(1.0).epsilon(0.03));
  }
  RngStream rng(1, 1);
  CHECK(rng.poisson(0.0) == 0);
  CHECK_THROWS_AS(rng.poisson(-1.0), std::invalid_argument);
}

TEST_CASE("streams with different ids do not collide") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(RngStream(5, s)());
  CHECK(seen.size() == 1000);
}
