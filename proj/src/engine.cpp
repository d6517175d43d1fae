#include "bbmlab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

#include "bbmlab/error.hpp"
#include "bbmlab/rng.hpp"

namespace bbmlab {

void Genealogy::add(std::uint64_t id, Record record) {
  if (id != records_.size()) throw std::logic_error("genealogy: ids must be added in order");
  records_.push_back(record);
}

const Genealogy::Record& Genealogy::at(std::uint64_t id) const {
  if (id >= records_.size()) throw std::out_of_range("genealogy: unknown particle id");
  return records_[id];
}

std::uint64_t Genealogy::ancestor_at(std::uint64_t id, double when) const {
  while (at(id).birth_time > when) {
    id = records_[id].parent;
    if (id == kNoParent) throw std::invalid_argument("genealogy: time precedes the root");
  }
  return id;
}

const Particle* PopulationSnapshot::find(std::uint64_t id) const {
  const auto it = std::lower_bound(particles.begin(), particles.end(), id,
                                   [](const Particle& p, std::uint64_t v) { return p.id < v; });
  if (it == particles.end() || it->id != id) return nullptr;
  return &*it;
}

void SimConfig::validate() const {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("simulate: horizon must be finite and >= 0");
  }
  if (!std::isfinite(drift)) throw std::invalid_argument("simulate: drift must be finite");
  if (prune_gap && !(*prune_gap >= 4.0)) {
    throw std::invalid_argument("simulate: prune_gap must be >= 4");
  }
  if (target && !(target->epsilon > 0.0 && std::isfinite(target->level))) {
    throw std::invalid_argument("simulate: target pruning needs a finite level and epsilon > 0");
  }
  if (population_cap == 0) throw std::invalid_argument("simulate: population_cap must be >= 1");
  if (starts.empty()) throw std::invalid_argument("simulate: at least one start position needed");
  for (double s : starts) {
    if (!std::isfinite(s)) throw std::invalid_argument("simulate: start positions must be finite");
  }
  double prev = -1.0;
  for (double c : checkpoint_times) {
    if (!(c >= 0.0 && c <= horizon)) {
      throw std::invalid_argument("simulate: checkpoint times must lie in [0, horizon]");
    }
    if (c < prev) throw std::invalid_argument("simulate: checkpoint times must be sorted");
    prev = c;
  }
}

std::vector<double> SimConfig::effective_checkpoints() const {
  if (checkpoint_times.empty()) return {horizon};
  return checkpoint_times;
}

namespace {

// log P[N(0,1) > z]
double log_normal_tail(double z) {
  if (z < 30.0) return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
  const double z2 = z * z;
  return -0.5 * z2 - std::log(z) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2));
}

// z with P[N(0,1) > z] = p, by bisection; only needs to be a safe lower bound.
double normal_upper_quantile(double p) {
  if (p >= 0.5) return -std::numeric_limits<double>::infinity();
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (log_normal_tail(mid) > std::log(p) ? lo : hi) = mid;
  }
  return lo;
}

struct Live {
  double death_time;
  std::uint64_t id;
  std::uint64_t lineage;
  std::uint64_t parent;
  double birth_time;
  double death_pos;
  double last_time;
  double last_pos;
  double branch_u;
  std::uint32_t bridges;
};

struct LaterDeath {
  bool operator()(const Live& a, const Live& b) const {
    if (a.death_time != b.death_time) return a.death_time > b.death_time;
    return a.id > b.id;
  }
};

class Run {
 public:
  Run(const SimConfig& config, const BranchingLaw& law, std::uint64_t replica)
      : config_(config), law_(law), replica_(replica), key_(mix64(config.seed)) {
    if (config_.record_genealogy) genealogy_ = std::make_shared<Genealogy>();
    if (config_.target) {
      log_epsilon_ = std::log(config_.target->epsilon);
      z_safe_ = normal_upper_quantile(config_.target->epsilon);
    }
  }

  SimulationResult execute() {
    SimulationResult result;
    for (std::size_t i = 0; i < config_.starts.size(); ++i) {
      const double x = config_.starts[i];
      running_max_ = std::max(running_max_, x);
      double log_h = 0.0;
      if (config_.target && negligible(0.0, x, log_h)) {
        result.pruned_mass += std::exp(log_h);
        ++pruned_;
        continue;
      }
      spawn(combine_keys(replica_, i), kNoParent, 0.0, x, result);
    }
    for (double c : config_.effective_checkpoints()) {
      while (!heap_.empty() && heap_.front().death_time <= c) {
        branch(result);
        if (heap_.size() > config_.population_cap) {
          result.status = RunStatus::population_cap_exceeded;
          break;
        }
      }
      if (result.partial()) break;
      result.snapshots.push_back(snapshot(c));
    }
    result.pruned_count = pruned_;
    for (auto& s : result.snapshots) s.genealogy = genealogy_;
    return result;
  }

 private:
  // True when the first-moment bound says no descendant of a particle at
  // (time, x) is likely to reach the target level.
  bool negligible(double time, double x, double& log_h) const {
    const double tau = config_.horizon - time;
    if (tau > 0.0) {
      const double z = (config_.target->level - x - config_.drift * tau) / std::sqrt(tau);
      // P[N > z] >= epsilon here, so the bound cannot fall below epsilon.
      if (z < z_safe_) return false;
      log_h = tau + log_normal_tail(z);
    } else {
      log_h = log_expected_exceedances(time, x, config_.horizon, config_.target->level,
                                       config_.drift);
    }
    return log_h < log_epsilon_;
  }

  void spawn(std::uint64_t lineage, std::uint64_t parent, double time, double x,
             SimulationResult& result) {
    const CounterRng rng(key_, lineage);
    const auto u = rng.uniforms(0, domain::kParticle);
    const double life = -std::log(u[0]);
    const double step = config_.drift * life + std::sqrt(life) * rng.normals(1, domain::kParticle)[0];
    const std::uint64_t id = next_id_++;
    if (genealogy_) genealogy_->add(id, {parent, time});
    heap_.push_back(Live{time + life, id, lineage, parent, time, x + step, time, x, u[1], 0});
    std::push_heap(heap_.begin(), heap_.end(), LaterDeath{});
  }

  void branch(SimulationResult& result) {
    std::pop_heap(heap_.begin(), heap_.end(), LaterDeath{});
    const Live p = heap_.back();
    heap_.pop_back();
    ++result.events;

    const double free_pos = p.death_pos - config_.drift * p.death_time;
    running_max_ = std::max(running_max_, free_pos);
    if (config_.prune_gap && free_pos < running_max_ - *config_.prune_gap) {
      ++pruned_;
      return;
    }
    const int k = law_.sample(p.branch_u);
    if (k == 0) return;
    // Siblings start at the same point, so one bound covers all of them.
    double log_h = 0.0;
    if (config_.target && negligible(p.death_time, p.death_pos, log_h)) {
      result.pruned_mass += k * std::exp(log_h);
      pruned_ += static_cast<std::uint64_t>(k);
      return;
    }
    for (int j = 0; j < k; ++j) {
      spawn(combine_keys(p.lineage, static_cast<std::uint64_t>(j) + 1), p.id, p.death_time,
            p.death_pos, result);
    }
  }

  PopulationSnapshot snapshot(double c) {
    PopulationSnapshot snap;
    snap.time = c;
    snap.replica = replica_;
    snap.pruned_count = pruned_;
    snap.particles.reserve(heap_.size());
    for (Live& p : heap_) {
      double pos = p.last_pos;
      if (c > p.last_time) {
        const double span = p.death_time - p.last_time;
        const double w = (c - p.last_time) / span;
        const double sd = std::sqrt((c - p.last_time) * (p.death_time - c) / span);
        const CounterRng rng(key_, p.lineage);
        pos = p.last_pos + w * (p.death_pos - p.last_pos) +
              sd * rng.normals(p.bridges++, domain::kBridge)[0];
        p.last_time = c;
        p.last_pos = pos;
      }
      snap.particles.push_back(Particle{p.id, pos, p.birth_time, p.parent});
    }
    std::sort(snap.particles.begin(), snap.particles.end(),
              [](const Particle& a, const Particle& b) { return a.id < b.id; });
    snap.annihilated = snap.particles.empty();
    return snap;
  }

  const SimConfig& config_;
  const BranchingLaw& law_;
  std::uint64_t replica_;
  std::uint64_t key_;
  std::vector<Live> heap_;
  std::shared_ptr<Genealogy> genealogy_;
  std::uint64_t next_id_ = 0;
  std::uint64_t pruned_ = 0;
  double running_max_ = -std::numeric_limits<double>::infinity();
  double log_epsilon_ = 0.0;
  double z_safe_ = 0.0;
};

}  // namespace

SimulationResult simulate(const SimConfig& config, const BranchingLaw& law, std::uint64_t replica) {
  config.validate();
  return Run(config, law, replica).execute();
}

double log_expected_exceedances(double time, double position, double horizon, double level,
                                double drift) {
  const double tau = horizon - time;
  if (tau <= 0.0) {
    return position >= level ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  const double z = (level - position - drift * tau) / std::sqrt(tau);
  return tau + log_normal_tail(z);
}

double max_displacement(const PopulationSnapshot& snapshot) {
  if (snapshot.particles.empty()) throw EmptyPopulationError();
  double m = snapshot.particles.front().position;
  for (const auto& p : snapshot.particles) m = std::max(m, p.position);
  return m;
}

double centering_m(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("centering_m: t must be > 0");
  return std::numbers::sqrt2 * t - 1.5 / std::numbers::sqrt2 * std::log(t);
}

PointConfiguration extremal_points(const PopulationSnapshot& snapshot, double center) {
  if (snapshot.particles.empty()) throw EmptyPopulationError();
  std::vector<double> pts;
  pts.reserve(snapshot.particles.size());
  for (const auto& p : snapshot.particles) pts.push_back(p.position - center);
  return PointConfiguration(std::move(pts), Origin::extremal);
}

double genealogical_distance(std::uint64_t i, std::uint64_t j, const PopulationSnapshot& snapshot) {
  if (!snapshot.genealogy) throw GenealogyUnavailableError();
  if (!snapshot.find(i) || !snapshot.find(j)) {
    throw std::invalid_argument("genealogical_distance: particle not alive in snapshot");
  }
  if (i == j) return snapshot.time;
  const Genealogy& g = *snapshot.genealogy;
  std::unordered_set<std::uint64_t> line;
  for (std::uint64_t a = i; a != kNoParent; a = g.at(a).parent) line.insert(a);
  std::uint64_t below = j;
  for (std::uint64_t a = g.at(j).parent; a != kNoParent; a = g.at(a).parent) {
    if (line.contains(a)) return g.at(below).birth_time;
    below = a;
  }
  return -std::numeric_limits<double>::infinity();
}

double entropic_envelope(double s, double t, double alpha) {
  if (!(t > 0.0)) throw std::invalid_argument("entropic_envelope: t must be > 0");
  if (!(s >= 0.0 && s <= t)) throw std::invalid_argument("entropic_envelope: s must lie in [0, t]");
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw std::invalid_argument("entropic_envelope: alpha must lie in (0, 1/2)");
  }
  const double correction = s <= 0.5 * t ? std::pow(s, alpha) : std::pow(t - s, alpha);
  return s / t * centering_m(t) - correction;
}

std::optional<double> EnvelopeCrossingReport::fraction() const {
  if (particles_in_target == 0) return std::nullopt;
  return static_cast<double>(particles_crossing) / static_cast<double>(particles_in_target);
}

EnvelopeCrossingReport envelope_crossing_fraction(
    std::span<const std::vector<PopulationSnapshot>> runs, double alpha, double r_d, double r_g,
    double d_lo, double d_hi, const std::function<double(double s, double t)>& envelope) {
  if (!(d_lo <= d_hi)) throw std::invalid_argument("envelope_crossing_fraction: empty target set");
  EnvelopeCrossingReport report;
  for (const auto& run : runs) {
    ++report.replicas;
    if (run.empty()) continue;
    const PopulationSnapshot& last = run.back();
    if (!last.genealogy) throw GenealogyUnavailableError();
    const double t = last.time;
    const double m = centering_m(t);
    std::vector<const PopulationSnapshot*> window;
    std::vector<double> bound;
    for (const auto& snap : run) {
      if (snap.time >= r_d && snap.time <= t - r_g) {
        window.push_back(&snap);
        bound.push_back(envelope ? envelope(snap.time, t) : entropic_envelope(snap.time, t, alpha));
      }
    }
    bool any_target = false;
    bool any_cross = false;
    for (const auto& p : last.particles) {
      const double d = p.position - m;
      if (d < d_lo || d > d_hi) continue;
      any_target = true;
      ++report.particles_in_target;
      for (std::size_t k = 0; k < window.size(); ++k) {
        const auto anc = last.genealogy->ancestor_at(p.id, window[k]->time);
        const Particle* q = window[k]->find(anc);
        if (q && q->position > bound[k]) {
          ++report.particles_crossing;
          any_cross = true;
          break;
        }
      }
    }
    if (any_target) ++report.replicas_with_target;
    if (any_cross) ++report.replicas_with_crossing;
  }
  return report;
}

}  // namespace bbmlab
