#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "bbmlab/cluster.hpp"
#include "bbmlab/error.hpp"
#include "bbmlab/pointproc.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bbmlab;

TEST_CASE("atom intensity and integrated mass") {
  CHECK(atom_intensity(-1.0) == doctest::Approx(3.281898972).epsilon(1e-9));
  CHECK(atom_intensity(0.0) == 0.0);
  CHECK(atom_intensity(1.0) == 0.0);
  // Quadrature oracle values.
  CHECK(atom_mass(-1.0, 0.0) == doctest::Approx(1.078645813).epsilon(1e-9));
  CHECK(atom_mass(-2.0, -1.0) == doctest::Approx(11.66151419).epsilon(1e-9));
  CHECK(atom_mass(-1.0, -1.0) == 0.0);
  CHECK_THROWS_AS(atom_mass(-std::numeric_limits<double>::infinity(), 0.0), Error);
  CHECK_THROWS_AS(atom_mass(-1.0, 0.5), std::invalid_argument);
}

TEST_CASE("poisson atoms: mean count, window and sub-window independence") {
  const int n = 100000;
  std::vector<std::uint64_t> left, right;
  std::vector<double> l, r;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(3, static_cast<std::uint64_t>(i), domain::kAtoms);
    const auto a = sample_atoms(-1.0, 0.0, rng);
    total += static_cast<double>(a.size());
    std::uint64_t cl = 0, cr = 0;
    for (double x : a.atoms) {
      CHECK_FALSE((x < -1.0 || x > 0.0));
      (x < -0.5 ? cl : cr) += 1;
    }
    left.push_back(cl);
    right.push_back(cr);
    l.push_back(static_cast<double>(cl));
    r.push_back(static_cast<double>(cr));
  }
  const double mass = atom_mass(-1.0, 0.0);
  const double se = std::sqrt(mass / n);
  CHECK(std::fabs(total / n - mass) < 3.0 * se);
  CHECK(std::fabs(sample_correlation(l, r)) < 0.05);
  for (const auto& counts : {left, right}) {
    const auto d = poisson_dispersion(counts);
    REQUIRE(d.index);
    CHECK(*d.index > 0.9);
    CHECK(*d.index < 1.1);
  }

  RngStream rng(1, 0, domain::kAtoms);
  CHECK(sample_atoms(-2.0, -2.0, rng).atoms.empty());
  CHECK_THROWS_AS(sample_atoms(-std::numeric_limits<double>::infinity(), -1.0, rng), Error);
}

TEST_CASE("auxiliary process at t=0 is the shifted atom configuration") {
  AuxiliaryConfig cfg;
  cfg.t = 0.0;
  cfg.window_lo = -3.0;
  cfg.window_hi = -0.5;
  cfg.seed = 7;
  const double z = 2.0;
  const auto s = sample_auxiliary(z, cfg, 4);
  REQUIRE(s.offspring.size() == s.atoms.size());
  std::vector<double> expect;
  for (double eta : s.atoms.atoms) expect.push_back(std::log(z) / std::numbers::sqrt2 + eta);
  CHECK(s.assembled == PointConfiguration(expect));
  CHECK(cluster_extrema(s).size() == s.atoms.size());
  const auto again = sample_auxiliary(z, cfg, 4);
  CHECK(again.assembled == s.assembled);
}

TEST_CASE("cluster extrema keeps one point per atom") {
  AuxiliarySample s;
  s.atoms.atoms = {-2.0};
  s.offspring.emplace_back(std::vector<double>{-3.0, -1.0});
  s.atom_max = {-1.0};
  CHECK(cluster_extrema(s).points() == std::vector<double>{-3.0});
}

TEST_CASE("extrema mode: counts are poisson with exponential intensity") {
  const auto tail = MaxTail::compute(4.0);
  CHECK(tail(-20.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(tail(10.0) < 1e-3);
  CHECK(tail(1.0) < tail(0.0));
  AuxiliaryConfig cfg;
  cfg.t = 4.0;
  cfg.mode = AuxiliaryMode::extrema;
  cfg.level = -1.0;
  cfg.seed = 12;
  std::vector<std::uint64_t> c0, c1;
  for (std::uint64_t i = 0; i < 4000; ++i) {
    const auto s = sample_auxiliary(1.0, cfg, i, BranchingLaw::binary(), &tail);
    const auto e = cluster_extrema(s);
    for (double x : e.points()) CHECK(x > cfg.level);
    c0.push_back(e.count_in(0.0, 1.0));
    c1.push_back(e.count_in(1.0, 2.0));
  }
  const auto d = poisson_dispersion(c0);
  REQUIRE(d.index);
  CHECK(*d.index > 0.8);
  CHECK(*d.index < 1.2);
  CHECK_THROWS_AS(sample_auxiliary(1.0, cfg, 0), std::invalid_argument);
}

TEST_CASE("cluster law: gaps, overshoot and determinism") {
  ClusterConfig cfg;
  cfg.t = 4.0;
  cfg.a = 0.5;
  cfg.samples = 40;
  cfg.gap_depth = 3.0;
  cfg.seed = 9;
  const auto pool = sample_cluster_law(cfg);
  REQUIRE(pool.samples.size() == 40);
  for (const auto& s : pool.samples) {
    CHECK(s.gaps.max() == 0.0);
    CHECK(s.gaps.points().front() >= -3.0);
    CHECK(s.overshoot > 0.0);
  }
  CHECK(pool.acceptance_rate() > 0.0);
  CHECK(pool.acceptance_bias_bound() < 0.05);

  cfg.jobs = 1;
  const auto serial = sample_cluster_law(cfg);
  CHECK(serial.trials == pool.trials);
  for (std::size_t i = 0; i < pool.samples.size(); ++i) {
    CHECK(serial.samples[i].gaps == pool.samples[i].gaps);
    CHECK(serial.samples[i].overshoot == pool.samples[i].overshoot);
  }

  ClusterConfig hopeless = cfg;
  hopeless.a = 40.0;
  hopeless.budget = 200;
  CHECK_THROWS_AS(sample_cluster_law(hopeless), NoAcceptanceError);

  std::stringstream csv;
  write_cluster_csv(csv, pool);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "sample_id,point");
  const auto j = nlohmann::json::parse(cluster_manifest_json(pool));
  CHECK(j["t"] == 4.0);
  CHECK(j["seed"] == 9);
  CHECK(j["acceptance_rate"] == pool.acceptance_rate());
}

TEST_CASE("assembly with singleton clusters is the bare exponential PPP") {
  std::vector<ClusterSample> pool(1);
  pool[0].gaps = PointConfiguration({0.0});
  std::vector<std::uint64_t> counts;
  double mean = 0.0;
  const double C = 0.5, z = 1.5, lo = -2.0;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    RngStream rng(2, i, domain::kAssembly);
    const auto p = assemble_limit_process(z, C, pool, rng, lo);
    if (!p.empty()) CHECK(p.points().front() >= lo);
    counts.push_back(p.count_in(0.0, 1.0));
    mean += static_cast<double>(p.count_in(0.0, 1.0));
  }
  // C z sqrt2 int_0^1 e^{-sqrt2 x} dx
  const double expected = C * z * (1.0 - std::exp(-std::numbers::sqrt2));
  CHECK(mean / 20000 == doctest::Approx(expected).epsilon(0.05));
  const auto d = poisson_dispersion(counts);
  CHECK(*d.index > 0.9);
  CHECK(*d.index < 1.1);

  RngStream rng(1, 1);
  CHECK_THROWS_AS(assemble_limit_process(1.0, 1.0, std::span<const ClusterSample>{}, rng), std::invalid_argument);
}

TEST_CASE("atom depth density") {
  CHECK(atom_depth_cdf(0.0) == 0.0);
  CHECK(atom_depth_cdf(std::numbers::sqrt2) == doctest::Approx(0.4275932955).epsilon(1e-9));
  CHECK(atom_depth_cdf(50.0) == doctest::Approx(1.0));
  const double outside = atom_depth_cdf(0.3) + 1.0 - atom_depth_cdf(3.5);
  CHECK(outside == doctest::Approx(0.01356419212).epsilon(1e-8));
}

TEST_CASE("atom window diagnostic flags underpowered input") {
  AuxiliaryConfig cfg;
  cfg.t = 1.0;
  cfg.seed = 3;
  std::vector<AuxiliarySample> samples;
  for (std::uint64_t i = 0; i < 20; ++i) samples.push_back(sample_auxiliary(1.0, cfg, i));
  const auto r = atom_window_diagnostic(1.0, 1e6, samples);
  CHECK(r.underpowered);
  CHECK(r.contributing == 0);
  CHECK_FALSE(r.histogram_mode.has_value());
  CHECK_FALSE(r.mass_outside.has_value());
  CHECK(r.counts.empty());
  CHECK_THROWS_AS(atom_window_diagnostic(2.0, 0.0, samples), std::invalid_argument);

  std::stringstream csv;
  write_auxiliary_csv(csv, samples);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "sample_id,atom_id,point");
}
