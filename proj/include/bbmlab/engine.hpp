#pragma once

// Event-driven branching Brownian motion.
//
// Each particle carries an Exp(1) clock; over a lifetime of length s its
// displacement is N(drift * s, s). At death it is replaced by k children at
// its position with probability p_k. Positions at checkpoint times are filled
// in by Brownian bridges between the particle's birth and death points, so
// adding or removing checkpoints never changes the branching tree.
//
// Randomness is keyed by (seed, replica, lineage): a particle's draws depend
// only on its ancestry, never on processing order or on which other
// particles were pruned.

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "bbmlab/branching_law.hpp"
#include "bbmlab/point_configuration.hpp"

namespace bbmlab {

inline constexpr std::uint64_t kNoParent = std::numeric_limits<std::uint64_t>::max();

struct Particle {
  std::uint64_t id = 0;
  double position = 0.0;
  double birth_time = 0.0;
  std::uint64_t parent_id = kNoParent;

  bool is_root() const { return parent_id == kNoParent; }
};

// Ancestor links for every particle ever created in one run, indexed by id.
class Genealogy {
 public:
  struct Record {
    std::uint64_t parent = kNoParent;
    double birth_time = 0.0;
  };

  void add(std::uint64_t id, Record record);
  const Record& at(std::uint64_t id) const;
  bool contains(std::uint64_t id) const { return id < records_.size(); }
  std::size_t size() const { return records_.size(); }

  // Ancestor of `id` (possibly `id` itself) alive at time `when`.
  std::uint64_t ancestor_at(std::uint64_t id, double when) const;

 private:
  std::vector<Record> records_;
};

struct PopulationSnapshot {
  double time = 0.0;
  std::uint64_t replica = 0;
  std::vector<Particle> particles;  // sorted by id
  std::shared_ptr<const Genealogy> genealogy;
  std::uint64_t pruned_count = 0;
  // Population emptied by pruning (or absent after a cap abort).
  bool annihilated = false;

  bool empty() const { return particles.empty(); }
  std::size_t size() const { return particles.size(); }
  // Particle by id; nullptr when not alive in this snapshot.
  const Particle* find(std::uint64_t id) const;
};

// Cull a particle at birth when the expected number of its descendants above
// `level` at the horizon (first-moment bound) drops below `epsilon`.
struct TargetPruning {
  double level = 0.0;
  double epsilon = 1e-6;
};

struct SimConfig {
  double horizon = 1.0;
  double drift = 0.0;
  // Cull particles, at their branch events, lying more than prune_gap below
  // the running maximum of event positions (measured with the drift removed).
  std::optional<double> prune_gap;
  std::optional<TargetPruning> target;
  std::uint64_t population_cap = 10'000'000;
  // Empty means {horizon}.
  std::vector<double> checkpoint_times;
  std::uint64_t seed = 0;
  bool record_genealogy = false;
  std::vector<double> starts{0.0};

  // Throws std::invalid_argument on violated invariants.
  void validate() const;
  std::vector<double> effective_checkpoints() const;
};

enum class RunStatus { complete, population_cap_exceeded };

struct SimulationResult {
  std::vector<PopulationSnapshot> snapshots;  // one per reached checkpoint
  RunStatus status = RunStatus::complete;
  std::uint64_t events = 0;
  std::uint64_t pruned_count = 0;
  // Sum over target-pruned particles of their expected exceedance count: an
  // upper bound on the probability that target pruning changed the event
  // {max > level}.
  double pruned_mass = 0.0;

  bool partial() const { return status != RunStatus::complete; }
  const PopulationSnapshot& final_snapshot() const { return snapshots.back(); }
};

SimulationResult simulate(const SimConfig& config, const BranchingLaw& law,
                          std::uint64_t replica = 0);

// Expected number of descendants above `level` at `horizon` of one particle at
// (time, position): e^{tau} P[N(drift tau, tau) > level - position].
double log_expected_exceedances(double time, double position, double horizon, double level,
                                double drift);

// Throws EmptyPopulationError on an empty snapshot.
double max_displacement(const PopulationSnapshot& snapshot);

// sqrt(2) t - 3/(2 sqrt 2) log t; throws std::invalid_argument for t <= 0.
double centering_m(double t);

PointConfiguration extremal_points(const PopulationSnapshot& snapshot, double center);

// Time of the last common ancestor's split; t when i == j and -infinity for
// particles descending from different roots. Throws GenealogyUnavailableError
// without genealogy and std::invalid_argument for ids not alive in the
// snapshot.
double genealogical_distance(std::uint64_t i, std::uint64_t j, const PopulationSnapshot& snapshot);

// (s/t) m(t) - e_{alpha,t}(s).
double entropic_envelope(double s, double t, double alpha);

struct EnvelopeCrossingReport {
  std::uint64_t particles_in_target = 0;
  std::uint64_t particles_crossing = 0;
  std::uint64_t replicas = 0;
  std::uint64_t replicas_with_target = 0;
  std::uint64_t replicas_with_crossing = 0;
  // Undefined (empty) when no particle landed in the target set.
  std::optional<double> fraction() const;
};

// Discrete-time proxy (checkpoints only) for the event that a particle ending
// in [d_lo, d_hi] + m(t) went above the envelope during [r_d, t - r_g].
// Each run is the checkpoint list of one replica with genealogy; the last
// snapshot is the terminal time t. `envelope` defaults to entropic_envelope.
EnvelopeCrossingReport envelope_crossing_fraction(
    std::span<const std::vector<PopulationSnapshot>> runs, double alpha, double r_d, double r_g,
    double d_lo, double d_hi, const std::function<double(double s, double t)>& envelope = {});

}  // namespace bbmlab
