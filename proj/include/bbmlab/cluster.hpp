#pragma once

// Auxiliary Poisson cluster process and the conditioned cluster law.
//
// Atoms follow the intensity sqrt(2/pi) (-x) e^{-sqrt2 x} dx on a bounded
// window of the negative half-line; each atom carries an independent BBM with
// drift -sqrt2. The whole configuration is shifted by (1/sqrt2) log z.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bbmlab/branching_law.hpp"
#include "bbmlab/fkpp.hpp"
#include "bbmlab/point_configuration.hpp"
#include "bbmlab/rng.hpp"

namespace bbmlab {

// sqrt(2/pi) (-x) e^{-sqrt2 x} for x < 0, else 0.
double atom_intensity(double x);
// Integrated intensity over [lo, hi] (hi <= 0). Throws Error for an
// unbounded window: the mass toward -infinity is infinite.
double atom_mass(double lo, double hi);

struct PoissonAtoms {
  std::vector<double> atoms;  // ascending
  double lo = 0.0;
  double hi = 0.0;
  double mass = 0.0;
  std::size_t size() const { return atoms.size(); }
};

// Count ~ Poisson(mass), positions by inversion of the integrated intensity.
PoissonAtoms sample_atoms(double lo, double hi, RngStream& rng);

// Default atom window [-3.5 sqrt t, -0.3 sqrt t].
inline constexpr double kWindowC1 = 0.3;
inline constexpr double kWindowC2 = 3.5;

// Tail of the drifted BBM maximum, P[max_k x_k(t) - sqrt2 t > y], read off a
// co-moving Heaviside solution at time t (log-linear interpolation).
class MaxTail {
 public:
  explicit MaxTail(const SolutionField& field);
  // Solves the F-KPP equation itself on a domain sized for `t`.
  static MaxTail compute(double t, const BranchingLaw& law = BranchingLaw::binary());

  double time() const { return time_; }
  double operator()(double y) const;
  // Draw y from the law of the maximum conditioned on exceeding `floor`.
  double sample_above(double floor, double u) const;

 private:
  double time_ = 0.0;
  double x0_ = 0.0;
  double dx_ = 0.0;
  std::vector<double> log_tail_;
};

enum class AuxiliaryMode {
  // One BBM per atom; offspring hold every particle.
  full,
  // Only atoms whose cluster maximum clears `level`; per-atom maxima are drawn
  // from the F-KPP law, offspring hold that maximum alone.
  extrema,
};

struct AuxiliaryConfig {
  double t = 10.0;
  // Defaults to [-kWindowC2 sqrt t, -kWindowC1 sqrt t].
  std::optional<double> window_lo;
  std::optional<double> window_hi;
  AuxiliaryMode mode = AuxiliaryMode::full;
  double level = 0.0;  // extrema mode only
  std::optional<double> prune_gap;
  std::uint64_t seed = 0;

  double lo() const;
  double hi() const;
};

struct AuxiliarySample {
  double z_value = 1.0;
  double t = 0.0;
  AuxiliaryMode mode = AuxiliaryMode::full;
  double level = 0.0;  // extrema mode: every kept cluster maximum clears it
  PoissonAtoms atoms;
  // Per atom: BBM positions at t minus sqrt2 t.
  std::vector<PointConfiguration> offspring;
  std::vector<double> atom_max;
  PointConfiguration assembled;

  double shift() const;
};

// Sample `index` of the auxiliary process at fixed z. Extrema mode needs the
// maximum tail at time config.t.
AuxiliarySample sample_auxiliary(double z, const AuxiliaryConfig& config, std::uint64_t index,
                                 const BranchingLaw& law = BranchingLaw::binary(),
                                 const MaxTail* tail = nullptr);

// One point per atom: shift + eta_i + per-atom maximum.
PointConfiguration cluster_extrema(const AuxiliarySample& sample);

struct ClusterSample {
  PointConfiguration gaps;  // max exactly 0, truncated at -gap_depth
  double overshoot = 0.0;
  double offset = 0.0;  // x = -a sqrt t + b
  std::uint64_t trial = 0;
};

struct ClusterConfig {
  double t = 16.0;
  double a = 0.7;
  double b = 0.0;
  std::size_t samples = 2000;
  std::uint64_t budget = 100'000'000;
  // Gap points are kept down to -gap_depth. Accepted trials are replayed
  // with pruning against threshold - gap_depth to recover them.
  double gap_depth = 6.0;
  double epsilon = 1e-7;
  std::uint64_t seed = 0;
  int jobs = 0;
};

struct ClusterPool {
  ClusterConfig config;
  std::vector<ClusterSample> samples;
  std::uint64_t trials = 0;
  double threshold = 0.0;  // acceptance when max > threshold
  // Mean first-moment mass culled per acceptance-stage trial; it bounds the
  // acceptance probability lost to pruning.
  double mean_pruned_mass = 0.0;
  double acceptance_rate() const;
  // mean_pruned_mass / acceptance_rate: bound on the relative share of
  // acceptances missed by pruning.
  double acceptance_bias_bound() const;
};

// Rejection sampling of BBM conditioned on x + max - sqrt2 t > 0. Trials run
// in index order; the first `samples` acceptances are kept. The overshoot and
// gaps come from the replay run, whose maximum can only be larger. Throws
// NoAcceptanceError when the budget yields none.
ClusterPool sample_cluster_law(const ClusterConfig& config,
                               const BranchingLaw& law = BranchingLaw::binary());

struct AtomWindowReport {
  double t = 0.0;
  double y = 0.0;
  std::size_t contributing = 0;
  bool underpowered = false;
  double c1 = kWindowC1;
  double c2 = kWindowC2;
  // Empty when underpowered.
  std::optional<double> histogram_mode;
  std::optional<double> mass_outside;
  // KS distance to z^2 e^{-z^2/2} / sqrt(pi/2).
  std::optional<double> ks_to_density;
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
};

// z = -eta / sqrt t over atoms whose cluster maximum (with the z shift) lands
// above y. Fewer than `min_atoms` contributors flags the report underpowered.
AtomWindowReport atom_window_diagnostic(double t, double y, std::span<const AuxiliarySample> samples,
                                        double c1 = kWindowC1, double c2 = kWindowC2,
                                        double bin_width = 0.1, std::size_t min_atoms = 100);

// CDF of the density z^2 e^{-z^2/2} / sqrt(pi/2) on z > 0.
double atom_depth_cdf(double z);

// PPP(C z sqrt2 e^{-sqrt2 x} dx) on [lo, infinity), each atom decorated by a
// cluster drawn with replacement from the pool. Points below `floor` are
// dropped.
PointConfiguration assemble_limit_process(double z, double C, std::span<const ClusterSample> pool,
                                          RngStream& rng, double lo = -6.0,
                                          double floor = -std::numeric_limits<double>::infinity());

// Cluster pool as CSV (sample_id,point) plus a JSON manifest.
void write_cluster_csv(std::ostream& out, const ClusterPool& pool);
std::string cluster_manifest_json(const ClusterPool& pool);
// Auxiliary samples as CSV (sample_id,atom_id,point).
void write_auxiliary_csv(std::ostream& out, std::span<const AuxiliarySample> samples);

}  // namespace bbmlab
