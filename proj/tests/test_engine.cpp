#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <vector>

#include "bbmlab/engine.hpp"
#include "bbmlab/error.hpp"
#include "bbmlab/parallel.hpp"
#include "bbmlab/snapshot_io.hpp"
#include "doctest.h"

using namespace bbmlab;

namespace {

double normal_cdf(double x, double sd) { return 0.5 * std::erfc(-x / (sd * std::numbers::sqrt2)); }

double ks_normal(std::vector<double> xs, double sd) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = normal_cdf(xs[i], sd);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

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

PopulationSnapshot snapshot_of(std::vector<double> xs, double t = 0.0) {
  PopulationSnapshot s;
  s.time = t;
  for (std::size_t i = 0; i < xs.size(); ++i) s.particles.push_back({i, xs[i], 0.0, kNoParent});
  return s;
}

}  // namespace

TEST_CASE("horizon zero leaves the root in place") {
  SimConfig cfg;
  cfg.horizon = 0.0;
  const auto res = simulate(cfg, BranchingLaw::binary());
  REQUIRE(res.snapshots.size() == 1);
  const auto& s = res.final_snapshot();
  REQUIRE(s.size() == 1);
  CHECK(s.particles[0].position == 0.0);
  CHECK(s.particles[0].is_root());
}

TEST_CASE("mean population grows like e^t") {
  SimConfig cfg;
  cfg.horizon = 2.0;
  cfg.seed = 11;
  const auto law = BranchingLaw::binary();
  std::vector<double> n;
  for (std::uint64_t r = 0; r < 100000; ++r) {
    n.push_back(static_cast<double>(simulate(cfg, law, r).final_snapshot().size()));
  }
  const auto m = moments(n);
  CHECK(std::fabs(m.mean - std::exp(2.0)) < 3.0 * m.se);
}

TEST_CASE("count martingale at several times") {
  SimConfig cfg;
  cfg.horizon = 4.0;
  cfg.checkpoint_times = {1.0, 2.0, 4.0};
  cfg.seed = 1;
  const auto law = BranchingLaw::binary();
  std::vector<std::vector<double>> w(3);
  for (std::uint64_t r = 0; r < 20000; ++r) {
    const auto res = simulate(cfg, law, r);
    for (int k = 0; k < 3; ++k) {
      w[k].push_back(res.snapshots[k].size() * std::exp(-res.snapshots[k].time));
    }
  }
  for (const auto& v : w) {
    const auto m = moments(v);
    CHECK(std::fabs(m.mean - 1.0) < 3.0 * m.se);
  }
}

TEST_CASE("degenerate law is a single Brownian motion") {
  SimConfig cfg;
  cfg.horizon = 4.0;
  cfg.seed = 3;
  const auto law = BranchingLaw::degenerate();
  std::vector<double> x;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    const auto s = simulate(cfg, law, r).final_snapshot();
    REQUIRE(s.size() == 1);
    x.push_back(max_displacement(s));
  }
  double s2 = 0, s4 = 0;
  for (double v : x) {
    s2 += v * v;
    s4 += v * v * v * v;
  }
  const double n = static_cast<double>(x.size());
  const double var = s2 / n;
  const double se = std::sqrt((s4 / n - var * var) / n);
  CHECK(std::fabs(var - 4.0) < 3.0 * se);
  CHECK(ks_normal(x, 2.0) < 0.02);
}

TEST_CASE("drift shifts the single-particle law") {
  SimConfig cfg;
  cfg.horizon = 3.0;
  cfg.drift = -std::numbers::sqrt2;
  std::vector<double> x;
  for (std::uint64_t r = 0; r < 20000; ++r) {
    x.push_back(max_displacement(simulate(cfg, BranchingLaw::degenerate(), r).final_snapshot()));
  }
  const auto m = moments(x);
  CHECK(std::fabs(m.mean + 3.0 * std::numbers::sqrt2) < 3.0 * m.se);
}

TEST_CASE("branch counts follow the offspring law") {
  const BranchingLaw law({{1, 0.3}, {2, 0.4}, {3, 0.3}});
  SimConfig cfg;
  cfg.horizon = 5.0;
  cfg.record_genealogy = true;
  std::map<std::uint64_t, int> children;
  std::map<int, double> splits;
  double total = 0;
  for (std::uint64_t r = 0; r < 300; ++r) {
    const auto res = simulate(cfg, law, r);
    const auto& g = *res.final_snapshot().genealogy;
    children.clear();
    for (std::uint64_t id = 0; id < g.size(); ++id) {
      if (g.at(id).parent != kNoParent) ++children[g.at(id).parent];
    }
    for (const auto& [parent, k] : children) {
      splits[k] += 1;
      total += 1;
    }
  }
  for (const auto& [k, p] : law.probabilities()) {
    const double f = splits[k] / total;
    CHECK(std::fabs(f - p) < 3.0 * std::sqrt(p * (1 - p) / total));
  }
}

TEST_CASE("runs are reproducible and independent of checkpoints") {
  SimConfig cfg;
  cfg.horizon = 6.0;
  cfg.seed = 77;
  cfg.record_genealogy = true;
  const auto law = BranchingLaw::binary();
  const auto a = simulate(cfg, law, 4).final_snapshot();
  const auto b = simulate(cfg, law, 4).final_snapshot();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.particles[i].position == b.particles[i].position);
    CHECK(a.particles[i].id == b.particles[i].id);
  }
  cfg.checkpoint_times = {1.0, 2.5, 6.0};
  const auto c = simulate(cfg, law, 4).final_snapshot();
  REQUIRE(c.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(c.particles[i].id == a.particles[i].id);
    CHECK(c.particles[i].parent_id == a.particles[i].parent_id);
    CHECK(c.particles[i].birth_time == a.particles[i].birth_time);
  }
  CHECK(simulate(cfg, law, 5).final_snapshot().size() != 0);
}

TEST_CASE("gap pruning barely changes the maximum") {
  SimConfig plain;
  plain.horizon = 8.0;
  plain.seed = 21;
  SimConfig pruned = plain;
  pruned.prune_gap = 8.0;
  const auto law = BranchingLaw::binary();
  std::vector<double> a, b;
  std::uint64_t culled = 0;
  for (std::uint64_t r = 0; r < 1500; ++r) {
    a.push_back(max_displacement(simulate(plain, law, r).final_snapshot()));
    const auto res = simulate(pruned, law, r);
    culled += res.pruned_count;
    b.push_back(max_displacement(res.final_snapshot()));
  }
  CHECK(culled > 0);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> all = a;
  all.insert(all.end(), b.begin(), b.end());
  double d = 0;
  for (double x : all) {
    const double fa = (std::upper_bound(a.begin(), a.end(), x) - a.begin()) / double(a.size());
    const double fb = (std::upper_bound(b.begin(), b.end(), x) - b.begin()) / double(b.size());
    d = std::max(d, std::fabs(fa - fb));
  }
  CHECK(d < 0.01);
}

TEST_CASE("target pruning keeps every run that reaches the level") {
  const auto law = BranchingLaw::binary();
  SimConfig plain;
  plain.horizon = 6.0;
  plain.seed = 8;
  SimConfig pruned = plain;
  const double level = 8.0;
  pruned.target = TargetPruning{level, 1e-4};
  int plain_hits = 0, pruned_hits = 0;
  double mass = 0;
  for (std::uint64_t r = 0; r < 2000; ++r) {
    const auto p = simulate(plain, law, r).final_snapshot();
    const auto res = simulate(pruned, law, r);
    mass += res.pruned_mass;
    const auto& q = res.final_snapshot();
    const bool hit = max_displacement(p) > level;
    plain_hits += hit;
    const bool hit_pruned = !q.empty() && max_displacement(q) > level;
    pruned_hits += hit_pruned;
    if (hit_pruned) CHECK(max_displacement(q) == max_displacement(p));
  }
  CHECK(plain_hits > 0);
  CHECK(plain_hits - pruned_hits <= std::max(1.0, 5.0 * mass));
}

TEST_CASE("population cap aborts with a partial flag") {
  SimConfig cfg;
  cfg.horizon = 10.0;
  cfg.population_cap = 100;
  const auto res = simulate(cfg, BranchingLaw::binary());
  CHECK(res.partial());
  CHECK(res.snapshots.empty());
}

TEST_CASE("config validation") {
  SimConfig cfg;
  cfg.prune_gap = 2.0;
  CHECK_THROWS_AS(simulate(cfg, BranchingLaw::binary()), std::invalid_argument);
  cfg.prune_gap.reset();
  cfg.checkpoint_times = {0.5, 2.0};
  CHECK_THROWS_AS(simulate(cfg, BranchingLaw::binary()), std::invalid_argument);
  cfg.checkpoint_times = {0.8, 0.5};
  CHECK_THROWS_AS(simulate(cfg, BranchingLaw::binary()), std::invalid_argument);
}

TEST_CASE("max displacement") {
  CHECK(max_displacement(snapshot_of({0.0})) == 0.0);
  CHECK(max_displacement(snapshot_of({-1.0, 2.5, 0.3})) == 2.5);
  CHECK_THROWS_AS(max_displacement(snapshot_of({})), EmptyPopulationError);
}

TEST_CASE("centering") {
  CHECK(centering_m(1.0) == doctest::Approx(1.414214).epsilon(1e-6));
  CHECK(centering_m(10.0) == doctest::Approx(11.699875).epsilon(1e-6));
  CHECK(centering_m(std::exp(1.0)) == doctest::Approx(2.783571).epsilon(1e-6));
  CHECK_THROWS_AS(centering_m(0.0), std::invalid_argument);
}

TEST_CASE("extremal points") {
  const auto pc = extremal_points(snapshot_of({3.0, 5.0}), 5.0);
  CHECK(pc.points() == std::vector<double>{-2.0, 0.0});
  CHECK(pc.max() == 0.0);
  CHECK(pc.origin() == Origin::extremal);
}

TEST_CASE("genealogical distance") {
  SimConfig cfg;
  cfg.horizon = 5.0;
  cfg.record_genealogy = true;
  cfg.seed = 2;
  const auto res = simulate(cfg, BranchingLaw::binary(), 1);
  const auto& s = res.final_snapshot();
  REQUIRE(s.size() >= 2);
  const auto& g = *s.genealogy;
  CHECK(genealogical_distance(s.particles[0].id, s.particles[0].id, s) == 5.0);

  // Root's children are ids 1 and 2; every survivor descends from one of them.
  const double first_split = g.at(1).birth_time;
  CHECK(g.at(2).birth_time == first_split);
  int cross_pairs = 0;
  for (const auto& p : s.particles) {
    for (const auto& q : s.particles) {
      if (p.id == q.id) continue;
      const double d = genealogical_distance(p.id, q.id, s);
      CHECK(d == genealogical_distance(q.id, p.id, s));
      if (g.ancestor_at(p.id, first_split) != g.ancestor_at(q.id, first_split)) {
        CHECK(d == first_split);
        ++cross_pairs;
      }
      if (p.parent_id == q.parent_id) CHECK(d == p.birth_time);
    }
  }
  CHECK(cross_pairs > 0);

  PopulationSnapshot bare = s;
  bare.genealogy.reset();
  CHECK_THROWS_AS(genealogical_distance(s.particles[0].id, s.particles[0].id, bare),
                  GenealogyUnavailableError);

  SimConfig single = cfg;
  const auto one = simulate(single, BranchingLaw::degenerate()).final_snapshot();
  REQUIRE(one.size() == 1);
  CHECK_THROWS_AS(genealogical_distance(one.particles[0].id, one.particles[0].id + 1, one),
                  std::invalid_argument);
}

TEST_CASE("separate roots share no ancestor") {
  SimConfig cfg;
  cfg.horizon = 0.0;
  cfg.record_genealogy = true;
  cfg.starts = {0.0, -3.0};
  const auto s = simulate(cfg, BranchingLaw::binary()).final_snapshot();
  REQUIRE(s.size() == 2);
  CHECK(std::isinf(genealogical_distance(0, 1, s)));
}

TEST_CASE("entropic envelope") {
  CHECK(entropic_envelope(0.0, 16.0, 1.0 / 3.0) == 0.0);
  CHECK(entropic_envelope(16.0, 16.0, 1.0 / 3.0) == doctest::Approx(centering_m(16.0)));
  CHECK(entropic_envelope(8.0, 16.0, 1.0 / 3.0) == doctest::Approx(7.843321).epsilon(1e-6));
  CHECK_THROWS_AS(entropic_envelope(17.0, 16.0, 0.3), std::invalid_argument);
}

TEST_CASE("envelope crossing fraction") {
  SimConfig cfg;
  cfg.horizon = 8.0;
  cfg.record_genealogy = true;
  cfg.checkpoint_times = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<std::vector<PopulationSnapshot>> runs;
  for (std::uint64_t r = 0; r < 40; ++r) runs.push_back(simulate(cfg, BranchingLaw::binary(), r).snapshots);

  const auto wide = envelope_crossing_fraction(runs, 0.45, 1.0, 1.0, -3.0, 3.0);
  REQUIRE(wide.fraction().has_value());
  CHECK(*wide.fraction() >= 0.0);
  CHECK(*wide.fraction() <= 1.0);

  const auto empty_window = envelope_crossing_fraction(runs, 0.45, 5.0, 5.0, -3.0, 3.0);
  CHECK(empty_window.fraction() == 0.0);

  const auto never = envelope_crossing_fraction(
      runs, 0.45, 1.0, 1.0, -3.0, 3.0,
      [](double, double) { return std::numeric_limits<double>::infinity(); });
  CHECK(never.fraction() == 0.0);

  const auto nobody = envelope_crossing_fraction(runs, 0.45, 1.0, 1.0, 50.0, 60.0);
  CHECK_FALSE(nobody.fraction().has_value());

  const auto narrow = envelope_crossing_fraction(runs, 0.45, 2.0, 2.0, -3.0, 3.0);
  CHECK(narrow.particles_crossing <= wide.particles_crossing);
}

TEST_CASE("snapshot serialization round-trips") {
  SimConfig cfg;
  cfg.horizon = 4.0;
  cfg.checkpoint_times = {2.0, 4.0};
  auto runs = simulate(cfg, BranchingLaw::binary(), 3).snapshots;
  std::stringstream csv;
  write_snapshots_csv(csv, runs);
  const auto back = read_snapshots_csv(csv);
  std::stringstream bin;
  write_snapshots_binary(bin, runs);
  const auto back_bin = read_snapshots_binary(bin);
  for (const auto* copy : {&back, &back_bin}) {
    REQUIRE(copy->size() == runs.size());
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const auto& x = runs[k].particles;
      const auto& y = (*copy)[k].particles;
      REQUIRE(x.size() == y.size());
      CHECK((*copy)[k].time == runs[k].time);
      for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(x[i].id == y[i].id);
        CHECK(x[i].parent_id == y[i].parent_id);
        CHECK(x[i].position == y[i].position);
        CHECK(x[i].birth_time == y[i].birth_time);
      }
    }
  }
  std::stringstream bad("garbage");
  CHECK_THROWS(read_snapshots_binary(bad));
}

TEST_CASE("parallel replica map matches the serial one") {
  SimConfig cfg;
  cfg.horizon = 5.0;
  const auto law = BranchingLaw::binary();
  auto f = [&](std::size_t r) { return max_displacement(simulate(cfg, law, r).final_snapshot()); };
  CHECK(map_replicas(64, f, 4) == map_replicas_serial(64, f));
}
