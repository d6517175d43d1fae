#include "bbmlab/martingales.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "bbmlab/error.hpp"
#include "bbmlab/parallel.hpp"
#include "bbmlab/snapshot_io.hpp"
#include "json.hpp"

namespace bbmlab {

double derivative_martingale(std::span<const double> positions, double t) {
  const double front = std::numbers::sqrt2 * t;
  double z = 0.0;
  for (double x : positions) {
    const double gap = front - x;
    z += gap * std::exp(-std::numbers::sqrt2 * gap);
  }
  return z;
}

double additive_companion(std::span<const double> positions, double t) {
  const double front = std::numbers::sqrt2 * t;
  double w = 0.0;
  for (double x : positions) w += std::exp(-std::numbers::sqrt2 * (front - x));
  return w;
}

namespace {
std::vector<double> positions_of(const PopulationSnapshot& s) {
  std::vector<double> xs;
  xs.reserve(s.particles.size());
  for (const auto& p : s.particles) xs.push_back(p.position);
  return xs;
}
}  // namespace

double derivative_martingale(const PopulationSnapshot& snapshot) {
  return derivative_martingale(positions_of(snapshot), snapshot.time);
}

double additive_companion(const PopulationSnapshot& snapshot) {
  return additive_companion(positions_of(snapshot), snapshot.time);
}

double ZEmpirical::rejection_rate() const {
  if (replica_count == 0) return 0.0;
  return static_cast<double>(rejected) / static_cast<double>(replica_count);
}

ZEmpirical make_z_empirical(std::vector<double> samples, double horizon) {
  ZEmpirical z;
  for (double v : samples) {
    if (!(v > 0.0)) throw std::invalid_argument("Z samples must be strictly positive");
  }
  z.replica_count = samples.size();
  z.samples = std::move(samples);
  z.horizon_used = horizon;
  return z;
}

ZEmpirical sample_limiting_Z(const ZSamplingConfig& config, const BranchingLaw& law) {
  if (config.paired_horizon && !(*config.paired_horizon > 0.0 && *config.paired_horizon < config.horizon)) {
    throw std::invalid_argument("sample_limiting_Z: paired horizon must lie in (0, horizon)");
  }
  SimConfig sim;
  sim.horizon = config.horizon;
  sim.seed = config.seed;
  sim.prune_gap = config.prune_gap;
  if (config.paired_horizon) sim.checkpoint_times = {*config.paired_horizon, config.horizon};

  struct Pair {
    MartingaleSample late;
    std::optional<double> early;
  };
  const auto runs = map_replicas(
      config.replicas,
      [&](std::size_t r) {
        const auto res = simulate(sim, law, r);
        if (res.partial()) throw Error("sample_limiting_Z: population cap exceeded");
        const auto& last = res.final_snapshot();
        Pair p{{last.time, derivative_martingale(last), additive_companion(last), r}, std::nullopt};
        if (config.paired_horizon) p.early = derivative_martingale(res.snapshots.front());
        return p;
      },
      config.jobs);

  ZEmpirical z;
  z.horizon_used = config.horizon;
  z.replica_count = config.replicas;
  z.seed = config.seed;
  std::vector<double> abs_drift, rel_drift;
  for (const auto& p : runs) {
    z.raw.push_back(p.late);
    if (p.late.z_value > 0.0) {
      z.samples.push_back(p.late.z_value);
    } else {
      ++z.rejected;
    }
    if (p.early && *p.early > 0.0 && p.late.z_value > 0.0) {
      abs_drift.push_back(std::fabs(p.late.z_value - *p.early));
      rel_drift.push_back(std::fabs(p.late.z_value - *p.early) / p.late.z_value);
    }
  }
  if (config.paired_horizon) {
    z.paired_horizon = config.paired_horizon;
    if (!abs_drift.empty()) {
      double s = 0.0;
      for (double d : abs_drift) s += d;
      z.mean_abs_drift = s / static_cast<double>(abs_drift.size());
      auto mid = rel_drift.begin() + static_cast<long>(rel_drift.size() / 2);
      std::nth_element(rel_drift.begin(), mid, rel_drift.end());
      z.median_relative_drift = *mid;
    }
  }
  return z;
}

void write_z_csv(std::ostream& out, const ZEmpirical& z) {
  out << "z\n";
  for (double v : z.samples) out << format_double(v) << '\n';
}

std::string z_sidecar_json(const ZEmpirical& z) {
  nlohmann::ordered_json j;
  j["horizon"] = z.horizon_used;
  j["replicas"] = z.replica_count;
  j["accepted"] = z.samples.size();
  j["rejected"] = z.rejected;
  j["rejection_rate"] = z.rejection_rate();
  j["horizon_too_small"] = z.horizon_too_small();
  j["seed"] = z.seed;
  if (z.paired_horizon) {
    j["paired_horizon"] = *z.paired_horizon;
    j["mean_abs_drift"] = z.mean_abs_drift ? nlohmann::json(*z.mean_abs_drift) : nlohmann::json();
    j["median_relative_drift"] =
        z.median_relative_drift ? nlohmann::json(*z.median_relative_drift) : nlohmann::json();
  }
  return j.dump(2);
}

ZEmpirical read_z_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "z") throw std::runtime_error("Z csv: missing header");
  std::vector<double> v;
  while (std::getline(in, line)) {
    if (!line.empty()) v.push_back(parse_double(line));
  }
  return make_z_empirical(std::move(v));
}

}  // namespace bbmlab
