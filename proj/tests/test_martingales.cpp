#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "bbmlab/martingales.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bbmlab;

namespace {

struct Moments {
  double mean;
  double se;
};

Moments moments(const std::vector<double>& xs) {
  double s = 0, s2 = 0;
  for (double x : xs) {
    s += x;
    s2 += x * x;
  }
  const double n = static_cast<double>(xs.size());
  const double m = s / n;
  return {m, std::sqrt((s2 / n - m * m) / (n - 1))};
}

std::vector<double> sample_at(double t, std::size_t replicas, bool z, std::uint64_t seed) {
  SimConfig cfg;
  cfg.horizon = t;
  cfg.seed = seed;
  std::vector<double> out;
  for (std::size_t r = 0; r < replicas; ++r) {
    const auto res = simulate(cfg, BranchingLaw::binary(), r);
    const auto& s = res.final_snapshot();
    out.push_back(z ? derivative_martingale(s) : additive_companion(s));
  }
  return out;
}

}  // namespace

TEST_CASE("martingale formulas") {
  const std::vector<double> origin{0.0};
  CHECK(derivative_martingale(origin, 0.0) == 0.0);
  CHECK(additive_companion(origin, 0.0) == 1.0);
  CHECK(derivative_martingale(origin, 1.0) == doctest::Approx(0.191393).epsilon(1e-6));
  const std::vector<double> at_front{std::numbers::sqrt2 * 3.0};
  CHECK(derivative_martingale(at_front, 3.0) == 0.0);
  CHECK(additive_companion(at_front, 3.0) == 1.0);
}

TEST_CASE("derivative martingale is a pure function of gaps") {
  // Translating positions by a and time by a/sqrt2 leaves every gap unchanged.
  const std::vector<double> xs{-1.3, 0.4, 2.2, 5.0};
  const double t = 4.0, a = 0.9;
  std::vector<double> moved;
  for (double x : xs) moved.push_back(x + a);
  CHECK(std::fabs(derivative_martingale(moved, t + a / std::numbers::sqrt2) - derivative_martingale(xs, t)) <
        1e-12);
  double direct = 0.0;
  for (double x : xs) {
    const double g = std::numbers::sqrt2 * t - x;
    direct += g * std::exp(-std::numbers::sqrt2 * g);
  }
  CHECK(std::fabs(derivative_martingale(xs, t) - direct) < 1e-12);
}

TEST_CASE("additive companion has mean one at t=2") {
  const auto w = sample_at(2.0, 100000, false, 21);
  const auto m = moments(w);
  CHECK(std::fabs(m.mean - 1.0) < 3.0 * m.se);
  for (double v : w) CHECK(v >= 0.0);
}

TEST_CASE("derivative martingale has mean zero") {
  for (double t : {1.0, 2.0}) {
    const auto z = sample_at(t, 100000, true, 31);
    const auto m = moments(z);
    CHECK(std::fabs(m.mean) < 3.0 * m.se);
  }
}

TEST_CASE("limiting Z sampler") {
  ZSamplingConfig cfg;
  cfg.replicas = 0;
  const auto empty = sample_limiting_Z(cfg);
  CHECK(empty.samples.empty());
  CHECK(empty.rejection_rate() == 0.0);

  cfg.replicas = 300;
  cfg.seed = 4;
  cfg.prune_gap = 8.0;
  const auto z = sample_limiting_Z(cfg);
  for (double v : z.samples) CHECK(v > 0.0);
  CHECK(z.samples.size() + z.rejected == 300);
  CHECK(z.rejection_rate() < 0.15);
  CHECK_FALSE(z.horizon_too_small());

  cfg.jobs = 1;
  const auto serial = sample_limiting_Z(cfg);
  CHECK(serial.samples == z.samples);

  CHECK_THROWS_AS(
      [] {
        ZSamplingConfig bad;
        bad.paired_horizon = 12.0;
        sample_limiting_Z(bad);
      }(),
      std::invalid_argument);
}

TEST_CASE("paired-horizon drift shrinks with the horizon") {
  ZSamplingConfig early;
  early.replicas = 200;
  early.seed = 8;
  early.prune_gap = 8.0;
  early.horizon = 8.0;
  early.paired_horizon = 4.0;
  ZSamplingConfig late = early;
  late.horizon = 12.0;
  late.paired_horizon = 8.0;
  const auto a = sample_limiting_Z(early);
  const auto b = sample_limiting_Z(late);
  REQUIRE(a.median_relative_drift);
  REQUIRE(b.median_relative_drift);
  CHECK(*b.median_relative_drift < *a.median_relative_drift);
  CHECK(b.mean_abs_drift.has_value());
}

TEST_CASE("Z csv round trip and sidecar") {
  auto z = make_z_empirical({0.25, 1.0 / 3.0, 2.5e-7}, 10.0);
  z.seed = 17;
  std::stringstream ss;
  write_z_csv(ss, z);
  const auto back = read_z_csv(ss);
  CHECK(back.samples == z.samples);
  const auto j = nlohmann::json::parse(z_sidecar_json(z));
  CHECK(j["horizon"] == 10.0);
  CHECK(j["replicas"] == 3);
  CHECK(j["seed"] == 17);
  CHECK(j["rejection_rate"] == 0.0);
  CHECK_THROWS_AS(make_z_empirical({1.0, -0.5}), std::invalid_argument);
}
