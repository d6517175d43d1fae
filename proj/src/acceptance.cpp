#include "bbmlab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bbmlab/branching_law.hpp"
#include "bbmlab/cluster.hpp"
#include "bbmlab/engine.hpp"
#include "bbmlab/error.hpp"
#include "bbmlab/experiments.hpp"
#include "bbmlab/manifest.hpp"
#include "bbmlab/parallel.hpp"
#include "bbmlab/pointproc.hpp"
#include "bbmlab/rng.hpp"

namespace bbmlab {

namespace {

namespace fs = std::filesystem;
constexpr double kSqrt2 = std::numbers::sqrt2;

Json laplace_json(const LaplaceEstimate& e) {
  return {{"phi", e.phi}, {"mean", e.mean}, {"std_error", e.std_error}, {"replicas", e.replicas}};
}

Json comparison_json(const ProcessComparison& c) {
  Json panel = Json::array();
  for (const auto& p : c.panel) panel.push_back({{"a", laplace_json(p.a)}, {"b", laplace_json(p.b)}, {"overlap", p.overlap}});
  return {{"panel", panel}, {"max_ks", c.max_ks}, {"ks_threshold", c.ks_threshold}, {"pass", c.pass}};
}

// u(t, x + m(t)) from a co-moving u-field at time t.
double max_law_cdf(const SolutionField& f, double x) {
  return f.u_at(x + centering_m(f.time) - f.frame_shift());
}

std::vector<std::uint64_t> interval_counts(std::span<const PointConfiguration> configs, double lo, double hi) {
  std::vector<std::uint64_t> out;
  out.reserve(configs.size());
  for (const auto& c : configs) out.push_back(c.count_in(lo, hi));
  return out;
}

double mean_count(std::span<const std::uint64_t> counts) {
  double s = 0.0;
  for (auto c : counts) s += static_cast<double>(c);
  return counts.empty() ? 0.0 : s / static_cast<double>(counts.size());
}

struct ExtremaCounts {
  double ratio = 0.0;
  std::optional<double> dispersion_0;
  std::optional<double> dispersion_1;
  double mean_0 = 0.0;
  double mean_1 = 0.0;
};

ExtremaCounts extrema_counts(double t, std::size_t samples, std::uint64_t seed, int jobs) {
  const auto tail = MaxTail::compute(t);
  AuxiliaryConfig cfg;
  cfg.t = t;
  cfg.mode = AuxiliaryMode::extrema;
  cfg.level = 0.0;
  cfg.seed = seed;
  const auto extrema = map_replicas(samples, [&](std::size_t i) {
    return cluster_extrema(sample_auxiliary(1.0, cfg, i, BranchingLaw::binary(), &tail));
  }, jobs);
  const auto c0 = interval_counts(extrema, 0.0, 1.0);
  const auto c1 = interval_counts(extrema, 1.0, 2.0);
  ExtremaCounts r;
  r.mean_0 = mean_count(c0);
  r.mean_1 = mean_count(c1);
  r.ratio = r.mean_0 > 0.0 ? r.mean_1 / r.mean_0 : 0.0;
  r.dispersion_0 = poisson_dispersion(c0).index;
  r.dispersion_1 = poisson_dispersion(c1).index;
  return r;
}

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(); }

bool in_band(const std::optional<double>& v, double lo, double hi) { return v && *v >= lo && *v <= hi; }

// Coarse and fine co-moving v-fields at r and 8r for the psi comparison.
std::vector<SolutionField> psi_fields(double r, double dx, double dt, int jobs) {
  Grid g;
  g.x_min = -40.0;
  g.x_max = 11.0 * r + 60.0;
  g.dx = dx;
  g.dt = dt;
  SolveOptions o;
  o.output = Convention::v;
  o.jobs = jobs;
  return solve(InitialCondition::heaviside(), BranchingLaw::binary(), g, 8.0 * r, {r, 8.0 * r}, o);
}

}  // namespace

Json criterion_json(const CriterionResult& r) {
  return {{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"measured", r.measured}, {"note", r.note},
          {"seconds", r.seconds}};
}

AcceptanceSuite::AcceptanceSuite(std::uint64_t seed, int jobs) : seed_(seed), jobs_(jobs) {}

std::uint64_t AcceptanceSuite::seed_for(int id, std::uint64_t sub) const {
  return combine_keys(combine_keys(seed_, static_cast<std::uint64_t>(id)), sub);
}

CriterionResult AcceptanceSuite::run(int id) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  switch (id) {
    case 1: r = mckean(); break;
    case 2: r = traveling_wave(); break;
    case 3: r = tail_constant_stability(); break;
    case 4: r = lalley_sellke(); break;
    case 5: r = limit_process_match(); break;
    case 6: r = extrema_poissonianity(); break;
    case 7: r = overshoot(); break;
    case 8: r = atom_window(); break;
    case 9: r = psi_sandwich(); break;
    case 10: r = infrastructure(); break;
    default: throw std::invalid_argument("acceptance: no criterion " + std::to_string(id));
  }
  r.id = id;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

const std::vector<PointConfiguration>& AcceptanceSuite::extremal10() {
  if (!extremal10_) extremal10_ = sample_extremal(10.0, 10000, seed_for(1), 8.0, jobs_);
  return *extremal10_;
}

const SolutionField& AcceptanceSuite::field10() {
  if (!field10_) field10_ = heaviside_fields(Grid{-40.0, 40.0, 0.02, 0.01, Frame::comoving}, {10.0}, Convention::u,
                                             BranchingLaw::binary(), jobs_).back();
  return *field10_;
}

const std::vector<SolutionField>& AcceptanceSuite::wave_fields() {
  if (!wave_fields_) {
    wave_fields_ = heaviside_fields(Grid{-40.0, 160.0, 0.02, 0.01, Frame::comoving}, {50.0, 100.0, 400.0},
                                    Convention::u, BranchingLaw::binary(), jobs_);
  }
  return *wave_fields_;
}

const WaveProfile& AcceptanceSuite::omega() {
  if (!omega_) omega_ = centered_profile(wave_fields().back(), Centering::by_m);
  return *omega_;
}

double AcceptanceSuite::fitted_C() { return tail_constant(omega(), 6.0, 9.0).constant; }

const ZEmpirical& AcceptanceSuite::z10() {
  if (!z10_) {
    ZSamplingConfig zc;
    zc.horizon = 10.0;
    zc.replicas = 1000;
    zc.prune_gap = 8.0;
    zc.seed = seed_for(4);
    zc.jobs = jobs_;
    z10_ = sample_limiting_Z(zc);
  }
  return *z10_;
}

CriterionResult AcceptanceSuite::mckean() {
  CriterionResult r;
  r.name = "McKean consistency";
  const auto& f = field10();
  const auto ecdf = empirical_max_cdf(extremal10());
  const double ks = ks_distance(ecdf, [&](double x) { return max_law_cdf(f, x); });
  r.pass = ks < 0.03;
  r.measured = {{"t", 10.0}, {"replicas", extremal10().size()}, {"prune_gap", 8.0}, {"ks", ks},
                {"threshold", 0.03}, {"ks_pvalue", kolmogorov_pvalue(ks, static_cast<double>(ecdf.size()))}};
  return r;
}

CriterionResult AcceptanceSuite::traveling_wave() {
  CriterionResult r;
  r.name = "Traveling-wave convergence";
  const auto& f = wave_fields();
  const auto wave = wave_profile(f[0], f[1], Centering::by_median);
  const auto late = centered_profile(f[2], Centering::by_median);
  const double residual100 = wave_ode_residual(wave, BranchingLaw::binary());
  const double residual400 = wave_ode_residual(late, BranchingLaw::binary());
  r.pass = wave.discrepancy < 5e-3 && residual400 < 1e-3;
  r.measured = {{"discrepancy_50_100", wave.discrepancy}, {"discrepancy_threshold", 5e-3},
                {"residual_t400", residual400}, {"residual_t100", residual100}, {"residual_threshold", 1e-3},
                {"dx", 0.02}, {"dt", 0.01}};
  r.note = "residual read on the t=400 profile; the t=100 value is reported for reference";
  return r;
}

CriterionResult AcceptanceSuite::tail_constant_stability() {
  CriterionResult r;
  r.name = "Tail constant stability";
  const auto a = tail_constant(omega(), 5.0, 8.0);
  const auto b = tail_constant(omega(), 6.0, 9.0);
  const double variation = std::fabs(a.constant - b.constant) / b.constant;
  r.pass = variation < 0.1 && a.reliable && b.reliable;
  r.measured = {{"C_5_8", a.constant}, {"C_6_9", b.constant}, {"variation", variation}, {"threshold", 0.1},
                {"within_window_5_8", a.relative_variation}, {"within_window_6_9", b.relative_variation},
                {"profile_time", omega().time}};
  return r;
}

CriterionResult AcceptanceSuite::lalley_sellke() {
  CriterionResult r;
  r.name = "Lalley-Sellke mixture";
  const double C = fitted_C();
  const auto& w = omega();
  auto sup_diff = [&](double c, const std::vector<double>& z) {
    double d = 0.0;
    for (int k = 0; k <= 700; ++k) {
      const double x = -3.0 + 0.01 * k;
      d = std::max(d, std::fabs(gumbel_mixture_cdf(x, c, z) - w.at(x)));
    }
    return d;
  };
  const auto& z = z10();
  const double ks = sup_diff(C, z.samples);
  double best_c = C, best = ks;
  for (int k = -40; k <= 40; ++k) {
    const double c = C * std::exp(0.01 * k);
    const double d = sup_diff(c, z.samples);
    if (d < best) {
      best = d;
      best_c = c;
    }
  }
  ZSamplingConfig zc;
  zc.horizon = 16.0;
  zc.replicas = 1000;
  zc.prune_gap = 8.0;
  zc.seed = seed_for(4, 16);
  zc.jobs = jobs_;
  const auto z16 = sample_limiting_Z(zc);
  const double ks16 = sup_diff(C, z16.samples);
  r.pass = ks < 0.02;
  r.measured = {{"C", C}, {"horizon", 10.0}, {"z_samples", z.samples.size()}, {"z_rejection_rate", z.rejection_rate()},
                {"ks", ks}, {"threshold", 0.02}, {"diagnostic_ks_horizon16", ks16},
                {"diagnostic_best_C", best_c}, {"diagnostic_ks_best_C", best}};
  r.note = "Z(10) is still drifting toward its limit; the horizon-16 value isolates that effect";
  return r;
}

CriterionResult AcceptanceSuite::limit_process_match() {
  CriterionResult r;
  r.name = "Extremal process vs assembled limit";
  const double C = fitted_C();
  const auto& z = z10().samples;
  ClusterConfig kc;
  kc.t = 10.0;
  kc.a = 0.5;
  kc.samples = 3000;
  kc.gap_depth = 7.0;
  kc.seed = seed_for(5);
  kc.jobs = jobs_;
  const auto pool = sample_cluster_law(kc);
  const double lo = -4.5;
  const auto seed = seed_for(5, 1);
  const auto assembled = map_replicas(10000, [&](std::size_t i) {
    RngStream rng(seed, i, domain::kAssembly);
    const double zi = z[rng.below(z.size())];
    return assemble_limit_process(zi, C, pool.samples, rng, lo, lo);
  }, jobs_);
  const auto panel = default_panel();
  const auto cmp = compare_processes(extremal10(), assembled, panel, 0.05);
  std::size_t overlaps = 0;
  for (const auto& p : cmp.panel) overlaps += p.overlap ? 1 : 0;
  r.pass = cmp.pass;
  r.measured = {{"comparison", comparison_json(cmp)}, {"overlapping", overlaps}, {"C", C},
                {"cluster_t", kc.t}, {"cluster_a", kc.a}, {"cluster_samples", pool.samples.size()},
                {"acceptance_rate", pool.acceptance_rate()}, {"acceptance_bias_bound", pool.acceptance_bias_bound()},
                {"atom_floor", lo}};
  return r;
}

CriterionResult AcceptanceSuite::extrema_poissonianity() {
  CriterionResult r;
  r.name = "Cluster-extrema Poissonianity";
  const double target = std::exp(-kSqrt2);
  const auto big = extrema_counts(1000.0, 40000, seed_for(6), jobs_);
  const auto small = extrema_counts(10.0, 10000, seed_for(6, 10), jobs_);
  const double rel = std::fabs(big.ratio / target - 1.0);
  r.pass = in_band(big.dispersion_0, 0.8, 1.2) && in_band(big.dispersion_1, 0.8, 1.2) && rel < 0.1;
  r.measured = {{"t", 1000.0}, {"z", 1.0}, {"samples", 40000}, {"dispersion_0_1", opt_json(big.dispersion_0)},
                {"dispersion_1_2", opt_json(big.dispersion_1)}, {"mean_0_1", big.mean_0}, {"mean_1_2", big.mean_1},
                {"ratio", big.ratio}, {"target_ratio", target}, {"relative_error", rel},
                {"diagnostic_t10", {{"ratio", small.ratio}, {"dispersion_0_1", opt_json(small.dispersion_0)},
                                    {"dispersion_1_2", opt_json(small.dispersion_1)}}}};
  r.note = "the ratio approaches its limit like exp(-c/sqrt t); t=10 is reported as a diagnostic";
  return r;
}

CriterionResult AcceptanceSuite::overshoot() {
  CriterionResult r;
  r.name = "Exponential overshoot";
  ClusterConfig kc;
  kc.t = 16.0;
  kc.a = 0.7;
  kc.samples = 2000;
  kc.gap_depth = 0.0;
  kc.seed = seed_for(7);
  kc.jobs = jobs_;
  const auto pool = sample_cluster_law(kc);
  std::vector<double> over;
  for (const auto& s : pool.samples) over.push_back(s.overshoot);
  const EmpiricalCdf ecdf(over);
  const double ks = ks_distance(ecdf, [](double x) { return x > 0.0 ? 1.0 - std::exp(-kSqrt2 * x) : 0.0; });

  auto gaps_at = [&](double a, std::uint64_t sub) {
    ClusterConfig c;
    c.t = 10.0;
    c.a = a;
    c.samples = 500;
    c.gap_depth = 4.5;
    c.seed = seed_for(7, sub);
    c.jobs = jobs_;
    const auto p = sample_cluster_law(c);
    std::vector<PointConfiguration> g;
    for (const auto& s : p.samples) g.push_back(s.gaps);
    return g;
  };
  const auto g05 = gaps_at(0.5, 1);
  const auto g10 = gaps_at(1.0, 2);
  auto panel = default_gap_panel();
  panel.erase(panel.begin() + 3, panel.end());
  const auto cmp = compare_processes(g05, g10, panel, 1.0);
  bool overlap = true;
  for (const auto& p : cmp.panel) overlap = overlap && p.overlap;
  r.pass = ks < 0.05 && pool.samples.size() >= 2000 && overlap;
  r.measured = {{"t", kc.t}, {"a", kc.a}, {"samples", pool.samples.size()}, {"trials", pool.trials},
                {"acceptance_rate", pool.acceptance_rate()}, {"acceptance_bias_bound", pool.acceptance_bias_bound()},
                {"ks_exp_sqrt2", ks}, {"threshold", 0.05},
                {"ks_pvalue", kolmogorov_pvalue(ks, static_cast<double>(over.size()))},
                {"x_independence", {{"t", 10.0}, {"a", {0.5, 1.0}}, {"samples", 500}, {"overlap", overlap},
                                    {"panel", comparison_json(cmp)["panel"]}}}};
  return r;
}

CriterionResult AcceptanceSuite::atom_window() {
  CriterionResult r;
  r.name = "Atom window";
  auto window_report = [&](double t, std::size_t n, std::uint64_t sub) {
    const auto tail = MaxTail::compute(t);
    AuxiliaryConfig a;
    a.t = t;
    a.mode = AuxiliaryMode::extrema;
    a.level = 0.0;
    a.window_lo = -6.0 * std::sqrt(t);
    a.window_hi = 0.0;
    a.seed = seed_for(8, sub);
    const auto samples = map_replicas(n, [&](std::size_t i) {
      return sample_auxiliary(1.0, a, i, BranchingLaw::binary(), &tail);
    }, jobs_);
    return atom_window_diagnostic(t, 0.0, samples);
  };
  const auto main = window_report(16.0, 100000, 0);
  const auto large = window_report(100.0, 20000, 1);
  const double target = kSqrt2;
  r.pass = !main.underpowered && std::fabs(*main.histogram_mode - target) <= 0.2 && *main.mass_outside < 0.1;
  r.measured = {{"t", 16.0}, {"y", 0.0}, {"z", 1.0}, {"window", {-6.0 * 4.0, 0.0}}, {"samples", 100000},
                {"contributing", main.contributing}, {"mode", opt_json(main.histogram_mode)},
                {"mode_target", target}, {"mode_tolerance", 0.2}, {"mass_outside", opt_json(main.mass_outside)},
                {"mass_threshold", 0.1}, {"ks_to_density", opt_json(main.ks_to_density)},
                {"diagnostic_t100", {{"contributing", large.contributing}, {"mode", opt_json(large.histogram_mode)},
                                     {"mass_outside", opt_json(large.mass_outside)},
                                     {"ks_to_density", opt_json(large.ks_to_density)}}}};
  r.note = "finite-t depth law sits below its limit; see the t=100 diagnostic";
  return r;
}

CriterionResult AcceptanceSuite::psi_sandwich() {
  CriterionResult r;
  r.name = "psi sandwich";
  Json rows = Json::array();
  std::vector<double> gammas;
  for (double rr : {4.0, 8.0, 16.0}) {
    const auto coarse = psi_fields(rr, 0.02, 0.01, jobs_);
    const auto fine = psi_fields(rr, 0.01, 0.005, jobs_);
    double gamma = 1.0, gamma_coarse = 1.0, gamma_fine = 1.0;
    for (double k : {8.0, 9.0, 10.0}) {
      const double X = k * rr, t = 8.0 * rr;
      const double lc = std::log(coarse[1].v_at(X) / psi_approx(coarse[0], rr, t, X));
      const double lf = std::log(fine[1].v_at(X) / psi_approx(fine[0], rr, t, X));
      // Both grids are second order; extrapolate the log ratio.
      const double le = (4.0 * lf - lc) / 3.0;
      gamma = std::max(gamma, std::exp(std::fabs(le)));
      gamma_coarse = std::max(gamma_coarse, std::exp(std::fabs(lc)));
      gamma_fine = std::max(gamma_fine, std::exp(std::fabs(lf)));
    }
    gammas.push_back(gamma);
    rows.push_back({{"r", rr}, {"t", 8.0 * rr}, {"gamma", gamma}, {"gamma_coarse", gamma_coarse},
                    {"gamma_fine", gamma_fine}});
  }
  r.pass = gammas[0] > gammas[1] && gammas[1] > gammas[2] && gammas[2] <= 1.2;
  r.measured = {{"rows", rows}, {"X", "{8r, 9r, 10r}"}, {"threshold_r16", 1.2}};
  r.note = "gamma = max over X of max(v/psi, psi/v) after Richardson extrapolation from dx 0.02/dt 0.01 and dx 0.01/dt 0.005";
  return r;
}

CriterionResult AcceptanceSuite::infrastructure() {
  CriterionResult r;
  r.name = "Deterministic infrastructure";
  Json m = Json::object();
  bool pass = true;

  const double exact = bridge_below_line_prob(1.0, 1.0, 2.0);
  const auto mc = bridge_monte_carlo(1.0, 1.0, 2.0, 100000, 1000, seed_for(10));
  const bool bridge_ok = std::fabs(mc.estimate - exact) < 3.0 * mc.std_error;
  m["bridge"] = {{"exact", exact}, {"estimate", mc.estimate}, {"std_error", mc.std_error}, {"pass", bridge_ok}};
  pass = pass && bridge_ok;

  const std::size_t n = 100000;
  const auto aseed = seed_for(10, 1);
  const auto counts = map_replicas(n, [&](std::size_t i) {
    RngStream rng(aseed, i, domain::kAtoms);
    return sample_atoms(-1.0, 0.0, rng).size();
  }, jobs_);
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  const double mass = atom_mass(-1.0, 0.0);
  const double se = std::sqrt(mass / static_cast<double>(n));
  const bool atoms_ok = std::fabs(total / static_cast<double>(n) - mass) < 3.0 * se;
  m["atoms"] = {{"quadrature_mean", mass}, {"sample_mean", total / static_cast<double>(n)}, {"std_error", se},
                {"pass", atoms_ok}};
  pass = pass && atoms_ok;

  Json repro = Json::object();
  auto note = [&](const char* key, bool ok) {
    repro[key] = ok;
    pass = pass && ok;
  };
  {
    SimConfig sim;
    sim.horizon = 6.0;
    sim.seed = seed_for(10, 2);
    sim.record_genealogy = true;
    sim.checkpoint_times = {2.0, 4.0, 6.0};
    auto positions = [&](int jobs) {
      return map_replicas(20, [&](std::size_t i) {
        std::vector<double> out;
        for (const auto& s : simulate(sim, BranchingLaw::binary(), i).snapshots) {
          for (const auto& p : s.particles) out.push_back(p.position);
        }
        return out;
      }, jobs);
    };
    const auto a = positions(1);
    note("simulate_rerun", a == positions(1));
    note("simulate_threads", a == positions(4));
  }
  {
    ZSamplingConfig zc;
    zc.horizon = 5.0;
    zc.replicas = 50;
    zc.seed = seed_for(10, 3);
    zc.jobs = 1;
    const auto a = sample_limiting_Z(zc);
    zc.jobs = 4;
    note("z_threads", a.samples == sample_limiting_Z(zc).samples);
  }
  {
    const Grid g{-20.0, 40.0, 0.02, 0.01, Frame::comoving};
    const auto a = heaviside_fields(g, {5.0}, Convention::u, BranchingLaw::binary(), 1);
    const auto b = heaviside_fields(g, {5.0}, Convention::u, BranchingLaw::binary(), 4);
    note("solve_threads", a.back().values == b.back().values);
    std::vector<double> v(a.back().values), w(v);
    react(v, BranchingLaw::binary(), 0.005, 4);
    react_serial(w, BranchingLaw::binary(), 0.005);
    note("react_kernel", v == w);
    const auto panel = default_panel();
    const auto configs = sample_extremal(4.0, 200, seed_for(10, 4), std::nullopt, 1);
    const auto p = laplace_panel(configs, panel, 4);
    const auto q = laplace_panel_serial(configs, panel);
    bool same = p.size() == q.size();
    for (std::size_t k = 0; same && k < p.size(); ++k) same = p[k].mean == q[k].mean && p[k].std_error == q[k].std_error;
    note("laplace_kernel", same);
  }
  {
    ClusterConfig kc;
    kc.t = 4.0;
    kc.a = 0.5;
    kc.samples = 40;
    kc.gap_depth = 3.0;
    kc.seed = seed_for(10, 5);
    kc.jobs = 1;
    const auto a = sample_cluster_law(kc);
    kc.jobs = 4;
    const auto b = sample_cluster_law(kc);
    bool same = a.trials == b.trials && a.samples.size() == b.samples.size();
    for (std::size_t k = 0; same && k < a.samples.size(); ++k) {
      same = a.samples[k].gaps == b.samples[k].gaps && a.samples[k].overshoot == b.samples[k].overshoot;
    }
    note("cluster_threads", same);
  }
  {
    // Command artifacts hash identically across reruns and thread counts.
    const auto base = fs::temp_directory_path() / ("bbmlab_repro_" + std::to_string(seed_for(10, 6) % 1000000007));
    Json config = merge_config("simulate-bbm", Json{{"replicas", 30}, {"t", 5.0}, {"seed", 11}});
    auto outputs = [&](const std::string& tag, int jobs) {
      RunOptions o;
      o.out = base / tag;
      o.jobs = jobs;
      run_command("simulate-bbm", config, o);
      std::ifstream in(o.out / "manifest.json");
      const auto j = nlohmann::json::parse(in);
      return j.at("outputs").dump();
    };
    const auto a = outputs("a", 1);
    note("command_rerun", a == outputs("b", 1));
    note("command_threads", a == outputs("c", 4));
    std::error_code ec;
    fs::remove_all(base, ec);
  }
  m["reproducibility"] = repro;
  r.pass = pass;
  r.measured = m;
  return r;
}

}  // namespace bbmlab
