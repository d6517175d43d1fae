#include "bbmlab/superposition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bbmlab/engine.hpp"
#include "bbmlab/error.hpp"
#include "bbmlab/parallel.hpp"
#include "bbmlab/rng.hpp"
#include "json.hpp"

namespace bbmlab {

namespace {

struct Replica {
  PointConfiguration gaps;
  double max = 0.0;
  std::vector<std::uint64_t> front_by_root;
};

Replica run_replica(const SimConfig& sim, const BranchingLaw& law, std::uint64_t replica,
                    double front_depth) {
  const auto res = simulate(sim, law, replica);
  if (res.partial()) throw Error("superposition_check: population cap exceeded");
  const auto& snap = res.final_snapshot();
  Replica out;
  out.front_by_root.assign(sim.starts.size(), 0);
  if (snap.empty()) return out;
  out.max = max_displacement(snap);
  std::vector<double> gaps;
  for (const auto& p : snap.particles) {
    const double g = p.position - out.max;
    gaps.push_back(g);
    if (g < -front_depth) continue;
    // Roots are created first, one per start and in order.
    const std::uint64_t root = snap.genealogy->ancestor_at(p.id, 0.0);
    ++out.front_by_root[root];
  }
  out.gaps = PointConfiguration(std::move(gaps), Origin::extremal);
  return out;
}

// Scalar s minimizing sup |F_a(x) - F_b(x - s)|: a coarse scan followed by
// golden-section refinement.
std::pair<double, double> fit_shift(const std::vector<double>& a, const std::vector<double>& b) {
  const EmpiricalCdf fa(a);
  auto ks_at = [&](double s) {
    std::vector<double> moved(b);
    for (double& x : moved) x += s;
    return ks_two_sample(fa, EmpiricalCdf(std::move(moved)));
  };
  double best = 0.0, best_ks = ks_at(0.0);
  for (double s = -3.0; s <= 3.0; s += 0.05) {
    const double d = ks_at(s);
    if (d < best_ks) best_ks = d, best = s;
  }
  double lo = best - 0.05, hi = best + 0.05;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < 40; ++i) {
    const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    if (ks_at(m1) <= ks_at(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  const double s = 0.5 * (lo + hi);
  const double d = ks_at(s);
  return d < best_ks ? std::pair{s, d} : std::pair{best, best_ks};
}

}  // namespace

SuperpositionReport superposition_check(const SuperpositionConfig& config, const BranchingLaw& law) {
  if (config.starts.empty()) throw std::invalid_argument("superposition_check: need at least one start");
  if (!(config.t > 0.0)) throw std::invalid_argument("superposition_check: t must be > 0");
  if (config.replicas == 0) throw std::invalid_argument("superposition_check: need replicas");
  SimConfig sim;
  sim.horizon = config.t;
  sim.prune_gap = config.prune_gap;
  sim.starts = config.starts;
  sim.seed = config.seed;
  sim.record_genealogy = true;
  SimConfig single = sim;
  single.starts = {0.0};
  // Independent of the superposed runs, so a start at 0 is not shared.
  single.seed = combine_keys(config.seed, domain::kSynthetic);

  const auto mixed = map_replicas(config.replicas, [&](std::size_t r) {
    return run_replica(sim, law, r, config.front_depth);
  }, config.jobs);
  const auto alone = map_replicas(config.replicas, [&](std::size_t r) {
    return run_replica(single, law, r, config.front_depth);
  }, config.jobs);

  SuperpositionReport rep;
  rep.config = config;
  std::vector<PointConfiguration> ga, gb;
  std::vector<double> ma, mb;
  std::vector<double> front(config.starts.size(), 0.0);
  for (const auto& r : mixed) {
    if (r.gaps.empty()) continue;
    ga.push_back(r.gaps);
    ma.push_back(r.max);
    for (std::size_t i = 0; i < front.size(); ++i) front[i] += static_cast<double>(r.front_by_root[i]);
  }
  for (const auto& r : alone) {
    if (r.gaps.empty()) continue;
    gb.push_back(r.gaps);
    mb.push_back(r.max);
  }
  if (ga.empty() || gb.empty()) throw EmptyPopulationError();
  rep.gaps = compare_processes(ga, gb, default_gap_panel());
  std::tie(rep.max_shift, rep.shifted_max_ks) = fit_shift(ma, mb);

  double total = 0.0, weight = 0.0;
  for (double f : front) total += f;
  const double top = *std::max_element(config.starts.begin(), config.starts.end());
  for (double s : config.starts) weight += std::exp(std::numbers::sqrt2 * (s - top));
  for (std::size_t i = 0; i < front.size(); ++i) {
    rep.front_share.push_back(total > 0.0 ? front[i] / total : 0.0);
    rep.predicted_share.push_back(std::exp(std::numbers::sqrt2 * (config.starts[i] - top)) / weight);
  }
  if (front.size() > 1) {
    const auto lead = static_cast<std::size_t>(
        std::max_element(front.begin(), front.end()) - front.begin());
    rep.one_sided = total > 0.0 && front[lead] == total;
    if (rep.one_sided) rep.dominant_start = lead;
  }
  return rep;
}

std::string superposition_json(const SuperpositionReport& report) {
  nlohmann::ordered_json j;
  j["starts"] = report.config.starts;
  j["t"] = report.config.t;
  j["replicas"] = report.config.replicas;
  j["seed"] = report.config.seed;
  j["front_depth"] = report.config.front_depth;
  auto& panel = j["gap_panel"] = nlohmann::ordered_json::array();
  for (const auto& p : report.gaps.panel) {
    panel.push_back({{"phi", p.a.phi},
                     {"superposed", {p.a.mean, p.a.std_error}},
                     {"single", {p.b.mean, p.b.std_error}},
                     {"overlap", p.overlap}});
  }
  j["gap_panel_pass"] = std::all_of(report.gaps.panel.begin(), report.gaps.panel.end(),
                                    [](const PanelComparison& p) { return p.overlap; });
  j["max_shift"] = report.max_shift;
  j["shifted_max_ks"] = report.shifted_max_ks;
  j["front_share"] = report.front_share;
  j["predicted_share"] = report.predicted_share;
  j["one_sided"] = report.one_sided;
  if (report.dominant_start) j["dominant_start"] = *report.dominant_start;
  return j.dump(2);
}

}  // namespace bbmlab
