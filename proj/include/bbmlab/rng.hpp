#pragma once

// Counter-based random numbers.
//
// Every draw is a pure function of (seed, stream, index), so results never
// depend on thread scheduling or on the order in which work is processed.
// The block cipher is Philox4x32-10 (Salmon, Moraes, Dror, Shaw, SC'11).

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace bbmlab {

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr Counter round(const Counter& c, const Key& k) {
  const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
  const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
  return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
          static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
}

constexpr Counter philox4x32_10(Counter c, Key k) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    c = round(c, k);
  }
  return c;
}

}  // namespace philox

// splitmix64 finalizer; used to derive keys and lineage identifiers.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine_keys(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b + 0x632BE59BD9B4E019ull));
}

// Maps 52 random bits to the open interval (0, 1).
inline double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

// Random-access generator: block(index, domain) returns 128 random bits that
// depend only on (key, stream, index, domain).
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t key, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        stream_(stream) {}

  std::array<std::uint64_t, 2> block(std::uint32_t index, std::uint32_t domain = 0) const {
    const philox::Counter ctr{static_cast<std::uint32_t>(stream_),
                              static_cast<std::uint32_t>(stream_ >> 32), index, domain};
    const auto out = philox::philox4x32_10(ctr, key_);
    return {(std::uint64_t{out[0]} << 32) | out[1], (std::uint64_t{out[2]} << 32) | out[3]};
  }

  // Two uniforms in (0,1).
  std::array<double, 2> uniforms(std::uint32_t index, std::uint32_t domain = 0) const {
    const auto b = block(index, domain);
    return {to_open_unit(b[0]), to_open_unit(b[1])};
  }

  // Two independent standard normals (Box-Muller).
  std::array<double, 2> normals(std::uint32_t index, std::uint32_t domain = 0) const {
    const auto u = uniforms(index, domain);
    const double r = std::sqrt(-2.0 * std::log(u[0]));
    const double a = 2.0 * std::numbers::pi * u[1];
    return {r * std::cos(a), r * std::sin(a)};
  }

  std::uint64_t stream() const { return stream_; }

 private:
  philox::Key key_;
  std::uint64_t stream_;
};

// Sequential view of one counter stream. Satisfies UniformRandomBitGenerator
// so it can also drive <algorithm> shuffles, but all distributions used by
// the library are implemented here to keep draws platform independent.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream, std::uint32_t domain = 0)
      : rng_(mix64(seed), stream), domain_(domain) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (!have_spare_bits_) {
      const auto b = rng_.block(counter_++, domain_);
      spare_bits_ = b[1];
      have_spare_bits_ = true;
      return b[0];
    }
    have_spare_bits_ = false;
    return spare_bits_;
  }

  double uniform() { return to_open_unit((*this)()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double exponential(double rate = 1.0) { return -std::log(uniform()) / rate; }

  double normal() {
    if (have_spare_normal_) {
      have_spare_normal_ = false;
      return spare_normal_;
    }
    const double u0 = uniform();
    const double u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u0));
    const double a = 2.0 * std::numbers::pi * u1;
    spare_normal_ = r * std::sin(a);
    have_spare_normal_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Poisson variate: product-of-uniforms for small means, PTRS
  // (Hormann 1993) otherwise.
  std::uint64_t poisson(double mean);

  // Uniform index in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  std::uint32_t draws_used() const { return counter_; }

 private:
  CounterRng rng_;
  std::uint32_t domain_;
  std::uint32_t counter_ = 0;
  std::uint64_t spare_bits_ = 0;
  bool have_spare_bits_ = false;
  double spare_normal_ = 0.0;
  bool have_spare_normal_ = false;
};

// Stream domains; keep distinct so that no two consumers share draws.
namespace domain {
inline constexpr std::uint32_t kParticle = 1;
inline constexpr std::uint32_t kBridge = 2;
inline constexpr std::uint32_t kAtoms = 3;
inline constexpr std::uint32_t kAssembly = 4;
inline constexpr std::uint32_t kSynthetic = 5;
inline constexpr std::uint32_t kMonteCarlo = 6;
}  // namespace domain

}  // namespace bbmlab
