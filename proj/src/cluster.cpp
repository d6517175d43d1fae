#include "bbmlab/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "bbmlab/engine.hpp"
#include "bbmlab/error.hpp"
#include "bbmlab/parallel.hpp"
#include "bbmlab/snapshot_io.hpp"
#include "json.hpp"

namespace bbmlab {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
const double kIntensityScale = std::sqrt(2.0 / std::numbers::pi);

// Antiderivative of (-x) e^{-sqrt2 x}.
double primitive(double x) { return std::exp(-kSqrt2 * x) * (x / kSqrt2 + 0.5); }

void check_window(double lo, double hi) {
  if (!std::isfinite(lo)) {
    throw Error("atom window must be bounded below: the intensity has infinite mass toward -infinity");
  }
  if (!(lo <= hi) || !(hi <= 0.0)) throw std::invalid_argument("atom window must satisfy lo <= hi <= 0");
}

// Position with integrated intensity `target` above lo, by bisection.
double invert_mass(double lo, double hi, double target) {
  const double base = primitive(lo);
  double a = lo, b = hi;
  for (int it = 0; it < 100 && b - a > 1e-13 * (1.0 + std::fabs(a)); ++it) {
    const double m = 0.5 * (a + b);
    if (primitive(m) - base < target) {
      a = m;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

std::uint64_t atom_stream(std::uint64_t index, std::size_t atom) {
  return combine_keys(index, static_cast<std::uint64_t>(atom) + 1);
}

}  // namespace

double atom_intensity(double x) { return x < 0.0 ? kIntensityScale * -x * std::exp(-kSqrt2 * x) : 0.0; }

double atom_mass(double lo, double hi) {
  check_window(lo, hi);
  return kIntensityScale * (primitive(hi) - primitive(lo));
}

PoissonAtoms sample_atoms(double lo, double hi, RngStream& rng) {
  PoissonAtoms out;
  out.lo = lo;
  out.hi = hi;
  out.mass = atom_mass(lo, hi);
  const std::uint64_t n = rng.poisson(out.mass);
  const double raw = out.mass / kIntensityScale;
  out.atoms.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) out.atoms.push_back(invert_mass(lo, hi, rng.uniform() * raw));
  std::sort(out.atoms.begin(), out.atoms.end());
  return out;
}

// ---------------------------------------------------------------- max tail

MaxTail::MaxTail(const SolutionField& field) : time_(field.time), x0_(field.x(0)), dx_(field.grid.dx) {
  if (field.grid.frame != Frame::comoving) throw std::invalid_argument("MaxTail: need a co-moving field");
  // The pinned right end distorts the last few units; drop them.
  const std::size_t keep = field.size() - std::min(field.size() - 2, static_cast<std::size_t>(5.0 / dx_));
  log_tail_.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const double v = field.v(i);
    if (!(v > 0.0)) break;
    log_tail_.push_back(std::log(std::min(v, 1.0)));
  }
  if (log_tail_.size() < 2) throw std::invalid_argument("MaxTail: field carries no tail");
}

MaxTail MaxTail::compute(double t, const BranchingLaw& law) {
  Grid g;
  g.x_max = std::max(40.0, 8.0 * std::sqrt(t) + 30.0);
  SolveOptions o;
  o.output = Convention::v;
  return MaxTail(solve(InitialCondition::heaviside(), law, g, t, {}, o).back());
}

double MaxTail::operator()(double y) const {
  const double s = (y - x0_) / dx_;
  if (s <= 0.0) return std::exp(log_tail_.front());
  const auto last = static_cast<double>(log_tail_.size() - 1);
  if (s >= last) {
    // Extend with the slope of the last cell.
    const double slope = log_tail_.back() - log_tail_[log_tail_.size() - 2];
    return std::exp(log_tail_.back() + slope * (s - last));
  }
  const auto i = static_cast<std::size_t>(s);
  const double w = s - static_cast<double>(i);
  return std::exp((1.0 - w) * log_tail_[i] + w * log_tail_[i + 1]);
}

double MaxTail::sample_above(double floor, double u) const {
  const double target = std::log(u) + std::log((*this)(floor));
  double a = floor, b = floor + 1.0;
  while (std::log((*this)(b)) > target) b += 2.0 * (b - a);
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    const double m = 0.5 * (a + b);
    if (std::log((*this)(m)) > target) {
      a = m;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// ---------------------------------------------------------------- auxiliary

double AuxiliaryConfig::lo() const { return window_lo.value_or(-kWindowC2 * std::sqrt(t)); }
double AuxiliaryConfig::hi() const { return window_hi.value_or(-kWindowC1 * std::sqrt(t)); }

double AuxiliarySample::shift() const { return std::log(z_value) / kSqrt2; }

namespace {

// Atoms thinned by the probability that their cluster clears `level`:
// intensity lambda(eta) q(eta) tabulated on a fine grid and inverted.
PoissonAtoms sample_thinned_atoms(double lo, double hi, double level, double shift, const MaxTail& tail,
                                  RngStream& rng) {
  constexpr std::size_t kCells = 4096;
  const double h = (hi - lo) / static_cast<double>(kCells);
  std::vector<double> cumulative(kCells + 1, 0.0);
  double prev = atom_intensity(lo) * tail(level - shift - lo);
  for (std::size_t k = 1; k <= kCells; ++k) {
    const double eta = lo + h * static_cast<double>(k);
    const double f = atom_intensity(eta) * tail(level - shift - eta);
    cumulative[k] = cumulative[k - 1] + 0.5 * h * (f + prev);
    prev = f;
  }
  PoissonAtoms out;
  out.lo = lo;
  out.hi = hi;
  out.mass = cumulative.back();
  const std::uint64_t n = h > 0.0 ? rng.poisson(out.mass) : 0;
  for (std::uint64_t j = 0; j < n; ++j) {
    const double target = rng.uniform() * out.mass;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    const auto k = static_cast<std::size_t>(std::clamp<long>(it - cumulative.begin(), 1, kCells));
    const double span = cumulative[k] - cumulative[k - 1];
    const double w = span > 0.0 ? (target - cumulative[k - 1]) / span : 0.5;
    out.atoms.push_back(lo + h * (static_cast<double>(k - 1) + w));
  }
  std::sort(out.atoms.begin(), out.atoms.end());
  return out;
}

}  // namespace

AuxiliarySample sample_auxiliary(double z, const AuxiliaryConfig& config, std::uint64_t index,
                                 const BranchingLaw& law, const MaxTail* tail) {
  if (!(z > 0.0) || !std::isfinite(z)) throw std::invalid_argument("sample_auxiliary: z must be > 0");
  if (!(config.t >= 0.0)) throw std::invalid_argument("sample_auxiliary: t must be >= 0");
  AuxiliarySample s;
  s.z_value = z;
  s.t = config.t;
  s.mode = config.mode;
  s.level = config.level;
  RngStream rng(config.seed, index, domain::kAtoms);
  const double lo = config.lo(), hi = config.hi();

  if (config.mode == AuxiliaryMode::extrema) {
    if (!tail) throw std::invalid_argument("sample_auxiliary: extrema mode needs the maximum tail");
    if (std::fabs(tail->time() - config.t) > 1e-9) {
      throw std::invalid_argument("sample_auxiliary: maximum tail computed at a different time");
    }
    check_window(lo, hi);
    s.atoms = sample_thinned_atoms(lo, hi, config.level, s.shift(), *tail, rng);
    std::vector<double> pts;
    for (double eta : s.atoms.atoms) {
      const double m = tail->sample_above(config.level - s.shift() - eta, rng.uniform());
      s.atom_max.push_back(m);
      s.offspring.emplace_back(std::vector<double>{m}, Origin::auxiliary);
      pts.push_back(s.shift() + eta + m);
    }
    s.assembled = PointConfiguration(std::move(pts), Origin::auxiliary);
    return s;
  }

  s.atoms = sample_atoms(lo, hi, rng);
  SimConfig sim;
  sim.horizon = config.t;
  sim.drift = -kSqrt2;
  sim.prune_gap = config.prune_gap;
  sim.seed = combine_keys(config.seed, index);
  std::vector<double> pts;
  for (std::size_t i = 0; i < s.atoms.size(); ++i) {
    const auto res = simulate(sim, law, atom_stream(index, i));
    if (res.partial()) throw Error("sample_auxiliary: population cap exceeded");
    std::vector<double> xs;
    for (const auto& p : res.final_snapshot().particles) xs.push_back(p.position);
    PointConfiguration off(std::move(xs), Origin::auxiliary);
    const double eta = s.atoms.atoms[i];
    s.atom_max.push_back(off.empty() ? -std::numeric_limits<double>::infinity() : off.max());
    for (double x : off.points()) pts.push_back(s.shift() + eta + x);
    s.offspring.push_back(std::move(off));
  }
  s.assembled = PointConfiguration(std::move(pts), Origin::auxiliary);
  return s;
}

PointConfiguration cluster_extrema(const AuxiliarySample& sample) {
  std::vector<double> pts;
  for (std::size_t i = 0; i < sample.atoms.size(); ++i) {
    if (std::isfinite(sample.atom_max[i])) pts.push_back(sample.shift() + sample.atoms.atoms[i] + sample.atom_max[i]);
  }
  return PointConfiguration(std::move(pts), Origin::auxiliary);
}

// ---------------------------------------------------------------- cluster law

double ClusterPool::acceptance_rate() const {
  return trials == 0 ? 0.0 : static_cast<double>(samples.size()) / static_cast<double>(trials);
}

double ClusterPool::acceptance_bias_bound() const {
  const double rate = acceptance_rate();
  return rate > 0.0 ? mean_pruned_mass / rate : std::numeric_limits<double>::infinity();
}

ClusterPool sample_cluster_law(const ClusterConfig& config, const BranchingLaw& law) {
  if (!(config.t > 0.0) || !(config.a > 0.0)) throw std::invalid_argument("sample_cluster_law: need t > 0, a > 0");
  if (!(config.gap_depth >= 0.0)) throw std::invalid_argument("sample_cluster_law: gap depth must be >= 0");
  if (config.budget == 0) throw std::invalid_argument("sample_cluster_law: empty budget");
  ClusterPool pool;
  pool.config = config;
  const double offset = -config.a * std::sqrt(config.t) + config.b;
  pool.threshold = kSqrt2 * config.t - offset;

  // Stage 1 only decides acceptance, so it prunes against the threshold itself.
  SimConfig scout;
  scout.horizon = config.t;
  scout.seed = config.seed;
  scout.target = TargetPruning{pool.threshold, config.epsilon};

  struct Trial {
    bool accepted = false;
    double pruned_mass = 0.0;
  };
  constexpr std::uint64_t kBatch = 8192;
  std::vector<std::uint64_t> accepted;
  double pruned_total = 0.0;
  std::uint64_t next = 0;
  while (accepted.size() < config.samples && next < config.budget) {
    const std::uint64_t count = std::min(kBatch, config.budget - next);
    const std::uint64_t first = next;
    const auto trials = map_replicas(
        count,
        [&](std::size_t k) {
          const auto res = simulate(scout, law, first + k);
          if (res.partial()) throw Error("sample_cluster_law: population cap exceeded");
          const auto& snap = res.final_snapshot();
          return Trial{!snap.empty() && max_displacement(snap) > pool.threshold, res.pruned_mass};
        },
        config.jobs);
    for (std::size_t k = 0; k < trials.size(); ++k) {
      pruned_total += trials[k].pruned_mass;
      pool.trials = first + k + 1;
      if (!trials[k].accepted) continue;
      accepted.push_back(first + k);
      if (accepted.size() == config.samples) break;
    }
    next = first + count;
  }
  pool.mean_pruned_mass = pruned_total / static_cast<double>(pool.trials);
  if (accepted.empty()) {
    // Rule of three: with no success in n trials, p < 3/n at 95%.
    throw NoAcceptanceError("sample_cluster_law: no acceptance within the budget of " +
                                std::to_string(pool.trials) + " trials",
                            3.0 / static_cast<double>(pool.trials));
  }

  // Stage 2 replays accepted trials with pruning relaxed by the gap depth.
  // Draws are keyed by lineage, so every stage-1 survivor reappears unchanged.
  SimConfig replay = scout;
  replay.target = TargetPruning{pool.threshold - config.gap_depth, config.epsilon};
  const auto samples = map_replicas(
      accepted.size(),
      [&](std::size_t k) {
        const auto res = simulate(replay, law, accepted[k]);
        if (res.partial()) throw Error("sample_cluster_law: population cap exceeded");
        const auto& snap = res.final_snapshot();
        const double top = max_displacement(snap);
        std::vector<double> gaps;
        for (const auto& p : snap.particles) {
          const double g = p.position - top;
          if (g >= -config.gap_depth) gaps.push_back(g);
        }
        return ClusterSample{PointConfiguration(std::move(gaps), Origin::cluster),
                             offset + top - kSqrt2 * config.t, offset, accepted[k]};
      },
      config.jobs);
  pool.samples.assign(samples.begin(), samples.end());
  return pool;
}

// ---------------------------------------------------------------- diagnostics

double atom_depth_cdf(double z) {
  if (z <= 0.0) return 0.0;
  return std::erf(z / kSqrt2) - kIntensityScale * z * std::exp(-0.5 * z * z);
}

AtomWindowReport atom_window_diagnostic(double t, double y, std::span<const AuxiliarySample> samples,
                                        double c1, double c2, double bin_width, std::size_t min_atoms) {
  if (!(t > 0.0)) throw std::invalid_argument("atom_window_diagnostic: t must be > 0");
  if (!(bin_width > 0.0)) throw std::invalid_argument("atom_window_diagnostic: bin width must be > 0");
  AtomWindowReport r;
  r.t = t;
  r.y = y;
  r.c1 = c1;
  r.c2 = c2;
  std::vector<double> depths;
  for (const auto& s : samples) {
    if (std::fabs(s.t - t) > 1e-9) throw std::invalid_argument("atom_window_diagnostic: sample at another t");
    if (s.mode == AuxiliaryMode::extrema && y < s.level) {
      throw std::invalid_argument("atom_window_diagnostic: y below the extrema-mode level");
    }
    for (std::size_t i = 0; i < s.atoms.size(); ++i) {
      if (s.shift() + s.atoms.atoms[i] + s.atom_max[i] > y) depths.push_back(-s.atoms.atoms[i] / std::sqrt(t));
    }
  }
  r.contributing = depths.size();
  if (depths.size() < min_atoms) {
    r.underpowered = true;
    return r;
  }
  const double top = *std::max_element(depths.begin(), depths.end());
  const auto bins = static_cast<std::size_t>(std::ceil(top / bin_width)) + 1;
  r.counts.assign(bins, 0);
  for (std::size_t k = 0; k <= bins; ++k) r.bin_edges.push_back(bin_width * static_cast<double>(k));
  std::size_t outside = 0;
  for (double d : depths) {
    ++r.counts[std::min(bins - 1, static_cast<std::size_t>(d / bin_width))];
    if (d < c1 || d > c2) ++outside;
  }
  const auto peak = static_cast<std::size_t>(std::max_element(r.counts.begin(), r.counts.end()) - r.counts.begin());
  r.histogram_mode = bin_width * (static_cast<double>(peak) + 0.5);
  r.mass_outside = static_cast<double>(outside) / static_cast<double>(depths.size());
  r.ks_to_density = ks_distance(EmpiricalCdf(std::move(depths)), atom_depth_cdf);
  return r;
}

PointConfiguration assemble_limit_process(double z, double C, std::span<const ClusterSample> pool,
                                          RngStream& rng, double lo, double floor) {
  if (pool.empty()) throw std::invalid_argument("assemble_limit_process: empty cluster pool");
  if (!(C > 0.0) || !(z > 0.0)) throw std::invalid_argument("assemble_limit_process: need C > 0 and z > 0");
  if (!std::isfinite(lo)) throw std::invalid_argument("assemble_limit_process: window must be bounded below");
  const std::uint64_t n = rng.poisson(C * z * std::exp(-kSqrt2 * lo));
  std::vector<double> pts;
  for (std::uint64_t k = 0; k < n; ++k) {
    const double atom = lo + rng.exponential(kSqrt2);
    const auto& cluster = pool[rng.below(pool.size())];
    for (double g : cluster.gaps.points()) {
      if (atom + g >= floor) pts.push_back(atom + g);
    }
  }
  return PointConfiguration(std::move(pts), Origin::auxiliary);
}

// ---------------------------------------------------------------- I/O

void write_cluster_csv(std::ostream& out, const ClusterPool& pool) {
  out << "sample_id,point\n";
  for (std::size_t i = 0; i < pool.samples.size(); ++i) {
    for (double g : pool.samples[i].gaps.points()) out << i << ',' << format_double(g) << '\n';
  }
}

std::string cluster_manifest_json(const ClusterPool& pool) {
  nlohmann::ordered_json j;
  j["t"] = pool.config.t;
  j["a"] = pool.config.a;
  j["b"] = pool.config.b;
  j["threshold"] = pool.threshold;
  j["samples"] = pool.samples.size();
  j["trials"] = pool.trials;
  j["acceptance_rate"] = pool.acceptance_rate();
  j["gap_depth"] = pool.config.gap_depth;
  j["epsilon"] = pool.config.epsilon;
  j["mean_pruned_mass"] = pool.mean_pruned_mass;
  j["acceptance_bias_bound"] = pool.acceptance_bias_bound();
  j["seed"] = pool.config.seed;
  std::vector<double> overshoots;
  for (const auto& s : pool.samples) overshoots.push_back(s.overshoot);
  j["overshoots"] = overshoots;
  return j.dump(2);
}

void write_auxiliary_csv(std::ostream& out, std::span<const AuxiliarySample> samples) {
  out << "sample_id,atom_id,point\n";
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& a = samples[s];
    for (std::size_t i = 0; i < a.offspring.size(); ++i) {
      for (double x : a.offspring[i].points()) {
        out << s << ',' << i << ',' << format_double(a.shift() + a.atoms.atoms[i] + x) << '\n';
      }
    }
  }
}

}  // namespace bbmlab
