#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bbmlab/branching_law.hpp"
#include "bbmlab/engine.hpp"

namespace bbmlab {

// sum_k (sqrt2 t - x_k) exp(-sqrt2 (sqrt2 t - x_k)); 0 for an empty snapshot.
double derivative_martingale(const PopulationSnapshot& snapshot);
// sum_k exp(-sqrt2 (sqrt2 t - x_k)).
double additive_companion(const PopulationSnapshot& snapshot);
// Same sums over raw positions at time t.
double derivative_martingale(std::span<const double> positions, double t);
double additive_companion(std::span<const double> positions, double t);

struct MartingaleSample {
  double time = 0.0;
  double z_value = 0.0;
  double w_value = 0.0;
  std::uint64_t replica = 0;
};

struct ZSamplingConfig {
  double horizon = 10.0;
  std::size_t replicas = 1000;
  std::uint64_t seed = 0;
  // Unset by default: gap pruning below the front removes part of Z's mass.
  std::optional<double> prune_gap;
  // Also record Z at this earlier time on the same paths.
  std::optional<double> paired_horizon;
  int jobs = 0;
};

struct ZEmpirical {
  std::vector<double> samples;  // strictly positive Z(horizon) values
  double horizon_used = 0.0;
  std::size_t replica_count = 0;
  std::size_t rejected = 0;
  std::uint64_t seed = 0;
  std::vector<MartingaleSample> raw;  // every replica, before rejection

  // Paired-horizon stability (replicas positive at both times).
  std::optional<double> paired_horizon;
  std::optional<double> mean_abs_drift;
  std::optional<double> median_relative_drift;

  double rejection_rate() const;
  // More than 10% of replicas had Z(horizon) <= 0.
  bool horizon_too_small() const { return rejection_rate() > 0.10; }
};

ZEmpirical sample_limiting_Z(const ZSamplingConfig& config,
                             const BranchingLaw& law = BranchingLaw::binary());

ZEmpirical make_z_empirical(std::vector<double> samples, double horizon = 0.0);

// One-column CSV (header `z`) and a JSON sidecar.
void write_z_csv(std::ostream& out, const ZEmpirical& z);
std::string z_sidecar_json(const ZEmpirical& z);
ZEmpirical read_z_csv(std::istream& in);

}  // namespace bbmlab
