#include "bbmlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "bbmlab/cluster.hpp"
#include "bbmlab/engine.hpp"
#include "bbmlab/error.hpp"
#include "bbmlab/manifest.hpp"
#include "bbmlab/martingales.hpp"
#include "bbmlab/parallel.hpp"
#include "bbmlab/pointproc.hpp"
#include "bbmlab/snapshot_io.hpp"
#include "bbmlab/superposition.hpp"

namespace bbmlab {

namespace {

namespace fs = std::filesystem;
constexpr double kSqrt2 = std::numbers::sqrt2;

// Rows of JSON scalars rendered as CSV or as a JSON array of objects.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;

  std::string render(Format format) const {
    if (format == Format::json) {
      Json out = Json::array();
      for (const auto& r : rows) {
        Json o;
        for (std::size_t c = 0; c < columns.size(); ++c) o[columns[c]] = r[c];
        out.push_back(std::move(o));
      }
      return out.dump(1) + "\n";
    }
    std::ostringstream os;
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) {
        if (c) os << ',';
        if (r[c].is_number_float()) {
          os << format_double(r[c].get<double>());
        } else if (!r[c].is_null()) {
          os << (r[c].is_string() ? r[c].get<std::string>() : r[c].dump());
        }
      }
      os << '\n';
    }
    return os.str();
  }
};

class Artifacts {
 public:
  explicit Artifacts(const RunOptions& options) : options_(options) { fs::create_directories(options.out); }

  void write(const std::string& name, const std::string& content) {
    const auto path = options_.out / name;
    atomic_write(path, content);
    entries_.push_back({name, sha256_hex(content), content.size()});
  }
  void table(const std::string& stem, const Table& t) {
    write(stem + (options_.format == Format::json ? ".json" : ".csv"), t.render(options_.format));
  }
  void json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

  CommandOutcome finish(const std::string& command, const Json& config, Json summary, int exit_code,
                        double seconds) {
    RunManifest m;
    m.command = command;
    m.config = config;
    m.config_hash = config_hash(config);
    m.wall_time_s = seconds;
    if (config.contains("seed")) m.seeds["seed"] = config["seed"];
    m.summary = summary;
    m.outputs = entries_;
    atomic_write(options_.out / "manifest.json", manifest_json(m).dump(2) + "\n");
    return {exit_code, std::move(summary)};
  }

  int jobs() const { return options_.jobs; }

 private:
  const RunOptions& options_;
  std::vector<ManifestEntry> entries_;
};

std::optional<double> opt(const Json& v) {
  return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
}

std::uint64_t seed_of(const Json& c) { return c.at("seed").get<std::uint64_t>(); }
std::size_t replicas_of(const Json& c) { return c.at("replicas").get<std::size_t>(); }

Table points_table(const std::vector<PointConfiguration>& configs) {
  Table t{{"sample_id", "point"}, {}};
  for (std::size_t i = 0; i < configs.size(); ++i) {
    for (double x : configs[i].points()) t.rows.push_back({i, x});
  }
  return t;
}

Json laplace_json(const LaplaceEstimate& e) {
  return {{"phi", e.phi}, {"mean", e.mean}, {"std_error", e.std_error},
          {"ci", {e.ci_lo(), e.mean + 1.96 * e.std_error}}, {"replicas", e.replicas}};
}

Json comparison_json(const ProcessComparison& c) {
  Json panel = Json::array();
  for (const auto& p : c.panel) {
    panel.push_back({{"a", laplace_json(p.a)}, {"b", laplace_json(p.b)}, {"overlap", p.overlap}});
  }
  return {{"panel", panel}, {"max_ks", c.max_ks}, {"ks_threshold", c.ks_threshold}, {"pass", c.pass}};
}

Grid grid_from(const Json& c) {
  Grid g;
  g.x_min = c.at("x_min").get<double>();
  g.x_max = c.at("x_max").get<double>();
  g.dx = c.at("dx").get<double>();
  g.dt = c.at("dt").get<double>();
  if (c.contains("frame")) {
    const auto f = c["frame"].get<std::string>();
    if (f != "comoving" && f != "lab") throw ConfigError("frame: expected comoving or lab");
    g.frame = f == "lab" ? Frame::lab : Frame::comoving;
  }
  return g;
}

// ---------------------------------------------------------------- commands

CommandOutcome simulate_bbm(const Json& c, Artifacts& out) {
  SimConfig sim;
  sim.horizon = c["t"].get<double>();
  sim.drift = c["drift"].get<double>();
  sim.starts = c["starts"].get<std::vector<double>>();
  sim.prune_gap = opt(c["prune_gap"]);
  sim.checkpoint_times = c["checkpoints"].get<std::vector<double>>();
  sim.seed = seed_of(c);
  sim.record_genealogy = c["record_genealogy"].get<bool>();
  sim.population_cap = c["population_cap"].get<std::uint64_t>();
  sim.validate();
  const auto law = law_from_json(c["offspring"]);
  const auto runs = map_replicas(replicas_of(c), [&](std::size_t r) { return simulate(sim, law, r); }, out.jobs());

  Table snap_table{{"replica", "time", "particle_id", "parent_id", "position", "birth_time"}, {}};
  Table maxima{{"replica", "max", "max_minus_m"}, {}};
  std::size_t partial = 0, annihilated = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (runs[r].partial()) ++partial;
    for (const auto& s : runs[r].snapshots) {
      for (const auto& p : s.particles) {
        snap_table.rows.push_back({s.replica, s.time, p.id, p.is_root() ? Json() : Json(p.parent_id),
                                   p.position, p.birth_time});
      }
    }
    if (runs[r].snapshots.empty()) continue;
    const auto& last = runs[r].final_snapshot();
    if (last.empty()) {
      ++annihilated;
      continue;
    }
    const double top = max_displacement(last);
    maxima.rows.push_back({r, top, sim.horizon > 0.0 ? Json(top - centering_m(sim.horizon)) : Json()});
  }
  out.table("snapshots", snap_table);
  out.table("maxima", maxima);
  Json summary = {{"replicas", runs.size()}, {"partial_runs", partial}, {"annihilated", annihilated}};
  return {partial ? kExitCriterionFailed : kExitOk, summary};
}

CommandOutcome solve_fkpp(const Json& c, Artifacts& out) {
  if (c["ic"] != "heaviside") throw ConfigError("ic: only heaviside data are exposed on the command line");
  const auto grid = grid_from(c);
  const double t = c["t"].get<double>(), earlier = c["earlier"].get<double>();
  if (!(earlier > 0.0 && earlier < t)) throw ConfigError("earlier: must lie in (0, t)");
  const auto centering = c["centering"] == "by_m" ? Centering::by_m : Centering::by_median;
  if (c["centering"] != "by_m" && c["centering"] != "by_median") throw ConfigError("centering: by_m or by_median");
  const auto law = law_from_json(c["offspring"]);
  const auto fields = heaviside_fields(grid, {earlier, t}, Convention::u, law, out.jobs());
  const auto& last = fields.back();

  std::ostringstream field_csv, profile_csv;
  write_field_csv(field_csv, last);
  out.write("field.csv", field_csv.str());
  out.write("field.json", field_sidecar_json(last, "heaviside", law.describe()) + "\n");
  const auto profile = centered_profile(last, centering);
  write_profile_csv(profile_csv, profile);
  out.write("profile.csv", profile_csv.str());

  const double residual = wave_ode_residual(profile, law);
  const double tolerance = c["residual_tolerance"].get<double>();
  Json summary = {{"t", t}, {"front_lab", front_position_lab(last)}, {"residual", residual},
                  {"residual_tolerance", tolerance}, {"residual_pass", residual < tolerance}};
  if (grid.frame == Frame::comoving && earlier >= 30.0) {
    const auto wave = wave_profile(fields[0], last, Centering::by_median);
    summary["median_discrepancy"] = wave.discrepancy;
    summary["converged"] = wave.converged;
  }
  const auto tail = tail_constant(profile, 6.0, 9.0);
  summary["tail_constant"] = tail.constant;
  summary["tail_reliable"] = tail.reliable;
  return {residual < tolerance ? kExitOk : kExitCriterionFailed, summary};
}

CommandOutcome sample_z(const Json& c, Artifacts& out) {
  ZSamplingConfig z;
  z.horizon = c["horizon"].get<double>();
  z.replicas = replicas_of(c);
  z.seed = seed_of(c);
  z.prune_gap = opt(c["prune_gap"]);
  z.paired_horizon = opt(c["paired_horizon"]);
  z.jobs = out.jobs();
  const auto res = sample_limiting_Z(z, law_from_json(c["offspring"]));
  Table t{{"z"}, {}};
  for (double v : res.samples) t.rows.push_back({v});
  out.table("z", t);
  out.write("z_sidecar.json", z_sidecar_json(res) + "\n");
  Json summary = {{"samples", res.samples.size()}, {"rejection_rate", res.rejection_rate()},
                  {"horizon_too_small", res.horizon_too_small()}};
  return {kExitOk, summary};
}

CommandOutcome sample_aux(const Json& c, Artifacts& out) {
  AuxiliaryConfig a;
  a.t = c["t"].get<double>();
  a.window_lo = opt(c["window_lo"]);
  a.window_hi = opt(c["window_hi"]);
  const auto mode = c["mode"].get<std::string>();
  if (mode != "full" && mode != "extrema") throw ConfigError("mode: full or extrema");
  a.mode = mode == "full" ? AuxiliaryMode::full : AuxiliaryMode::extrema;
  a.level = c["level"].get<double>();
  a.prune_gap = opt(c["prune_gap"]);
  a.seed = seed_of(c);
  const auto law = law_from_json(c["offspring"]);
  std::optional<MaxTail> tail;
  if (a.mode == AuxiliaryMode::extrema) tail = MaxTail::compute(a.t, law);
  const double z = c["z"].get<double>();
  const auto samples = map_replicas(replicas_of(c), [&](std::size_t i) {
    return sample_auxiliary(z, a, i, law, tail ? &*tail : nullptr);
  }, out.jobs());
  std::ostringstream csv;
  write_auxiliary_csv(csv, samples);
  out.write("auxiliary.csv", csv.str());
  double atoms = 0.0;
  for (const auto& s : samples) atoms += static_cast<double>(s.atoms.size());
  Json summary = {{"samples", samples.size()}, {"window", {a.lo(), a.hi()}},
                  {"mean_atoms", samples.empty() ? 0.0 : atoms / static_cast<double>(samples.size())}};
  return {kExitOk, summary};
}

CommandOutcome sample_cluster(const Json& c, Artifacts& out) {
  ClusterConfig k;
  k.t = c["t"].get<double>();
  k.a = c["a"].get<double>();
  k.b = c["b"].get<double>();
  k.samples = replicas_of(c);
  k.budget = c["budget"].get<std::uint64_t>();
  k.gap_depth = c["gap_depth"].get<double>();
  k.epsilon = c["epsilon"].get<double>();
  k.seed = seed_of(c);
  k.jobs = out.jobs();
  const auto pool = sample_cluster_law(k, law_from_json(c["offspring"]));
  std::vector<PointConfiguration> gaps;
  std::vector<double> overshoot;
  for (const auto& s : pool.samples) {
    gaps.push_back(s.gaps);
    overshoot.push_back(s.overshoot);
  }
  out.table("cluster", points_table(gaps));
  out.write("cluster_manifest.json", cluster_manifest_json(pool) + "\n");
  const EmpiricalCdf ecdf(overshoot);
  const double ks = ks_distance(ecdf, [](double x) { return x > 0.0 ? 1.0 - std::exp(-kSqrt2 * x) : 0.0; });
  Json summary = {{"samples", pool.samples.size()},
                  {"trials", pool.trials},
                  {"acceptance_rate", pool.acceptance_rate()},
                  {"acceptance_bias_bound", pool.acceptance_bias_bound()},
                  {"overshoot_ks_exp_sqrt2", ks},
                  {"overshoot_ks_pvalue", kolmogorov_pvalue(ks, static_cast<double>(overshoot.size()))}};
  return {kExitOk, summary};
}

std::vector<PointConfiguration> read_points_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
  }
  const auto id_col = std::find(cols.begin(), cols.end(), "sample_id") - cols.begin();
  const auto pt_col = std::find(cols.begin(), cols.end(), "point") - cols.begin();
  if (id_col == static_cast<long>(cols.size()) || pt_col == static_cast<long>(cols.size())) {
    throw Error(path.string() + ": expected sample_id and point columns");
  }
  std::map<std::size_t, std::vector<double>> groups;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < cols.size()) throw Error(path.string() + ": short row");
    groups[std::stoull(cells[static_cast<std::size_t>(id_col)])].push_back(
        parse_double(cells[static_cast<std::size_t>(pt_col)]));
  }
  std::vector<PointConfiguration> out;
  if (groups.empty()) return out;
  out.resize(groups.rbegin()->first + 1);
  for (auto& [id, pts] : groups) out[id] = PointConfiguration(std::move(pts));
  return out;
}

CommandOutcome compare_laplace(const Json& c, Artifacts& out) {
  const auto a = read_points_csv(c["a"].get<std::string>());
  const auto b = read_points_csv(c["b"].get<std::string>());
  if (a.empty() || b.empty()) throw Error("compare-laplace: both inputs need samples");
  const auto panel_name = c["panel"].get<std::string>();
  if (panel_name != "default" && panel_name != "gap") throw ConfigError("panel: default or gap");
  const auto panel = panel_name == "gap" ? default_gap_panel() : default_panel();
  const auto cmp = compare_processes(a, b, panel, c["ks_threshold"].get<double>());
  Table t{{"phi", "mean_a", "se_a", "mean_b", "se_b", "overlap"}, {}};
  for (const auto& p : cmp.panel) {
    t.rows.push_back({p.a.phi, p.a.mean, p.a.std_error, p.b.mean, p.b.std_error, p.overlap ? 1 : 0});
  }
  out.table("panel", t);
  auto summary = comparison_json(cmp);
  out.json("report.json", summary);
  return {cmp.pass ? kExitOk : kExitCriterionFailed, summary};
}

CommandOutcome max_law(const Json& c, Artifacts& out) {
  const double t = c["t"].get<double>();
  const auto law = law_from_json(c["offspring"]);
  const auto configs = sample_extremal(t, replicas_of(c), seed_of(c), opt(c["prune_gap"]), out.jobs(), law);
  Grid g = grid_from(c);
  const auto field = heaviside_fields(g, {t}, Convention::u, law, 1).back();
  const double shift = centering_m(t) - field.frame_shift();
  const auto pde = [&](double x) { return field.u_at(shift + x); };
  const auto ecdf = empirical_max_cdf(configs);
  const double ks = ks_distance(ecdf, pde);
  Table cdf{{"x", "empirical", "pde"}, {}};
  for (double x = -6.0; x <= 6.0 + 1e-9; x += 0.05) cdf.rows.push_back({x, ecdf(x), pde(x)});
  out.table("max_cdf", cdf);
  const double tol = c["ks_tolerance"].get<double>();
  Json summary = {{"t", t}, {"samples", ecdf.size()}, {"skipped", ecdf.skipped()}, {"ks", ks},
                  {"ks_pvalue", kolmogorov_pvalue(ks, static_cast<double>(ecdf.size()))},
                  {"ks_tolerance", tol}, {"pass", ks < tol}};
  return {ks < tol ? kExitOk : kExitCriterionFailed, summary};
}

CommandOutcome genealogy_diagnostic(const Json& c, Artifacts& out) {
  const double t = c["t"].get<double>(), step = c["checkpoint_step"].get<double>();
  if (!(step > 0.0)) throw ConfigError("checkpoint_step: must be > 0");
  SimConfig sim;
  sim.horizon = t;
  sim.seed = seed_of(c);
  sim.prune_gap = opt(c["prune_gap"]);
  sim.record_genealogy = true;
  for (double s = step; s < t - 1e-9; s += step) sim.checkpoint_times.push_back(s);
  sim.checkpoint_times.push_back(t);
  const auto law = law_from_json(c["offspring"]);
  const auto top = c["top"].get<std::size_t>();
  const auto runs = map_replicas(replicas_of(c), [&](std::size_t r) {
    auto res = simulate(sim, law, r);
    if (res.partial()) throw Error("genealogy-diagnostic: population cap exceeded");
    return std::move(res.snapshots);
  }, out.jobs());
  const auto crossing = envelope_crossing_fraction(runs, c["alpha"].get<double>(), c["r_d"].get<double>(),
                                                   c["r_g"].get<double>(), c["d_lo"].get<double>(),
                                                   c["d_hi"].get<double>());
  Table pairs{{"replica", "i", "j", "q"}, {}};
  const double r_d = c["r_d"].get<double>(), r_g = c["r_g"].get<double>();
  std::size_t early = 0, late = 0, middle = 0;
  for (const auto& run : runs) {
    const auto& last = run.back();
    auto ps = last.particles;
    std::sort(ps.begin(), ps.end(), [](const Particle& a, const Particle& b) { return a.position > b.position; });
    if (ps.size() > top) ps.resize(top);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (std::size_t j = i + 1; j < ps.size(); ++j) {
        const double q = genealogical_distance(ps[i].id, ps[j].id, last);
        pairs.rows.push_back({last.replica, ps[i].id, ps[j].id, q});
        (q < r_d ? early : q > t - r_g ? late : middle) += 1;
      }
    }
  }
  out.table("pairs", pairs);
  const double n = static_cast<double>(early + late + middle);
  Json summary = {{"t", t},
                  {"pairs", early + late + middle},
                  {"share_branch_early", n > 0 ? early / n : 0.0},
                  {"share_branch_late", n > 0 ? late / n : 0.0},
                  {"share_branch_middle", n > 0 ? middle / n : 0.0},
                  {"particles_in_target", crossing.particles_in_target},
                  {"particles_crossing", crossing.particles_crossing}};
  summary["crossing_fraction"] = crossing.fraction() ? Json(*crossing.fraction()) : Json();
  return {kExitOk, summary};
}

CommandOutcome atom_window(const Json& c, Artifacts& out) {
  const double t = c["t"].get<double>(), y = c["y"].get<double>();
  const auto law = law_from_json(c["offspring"]);
  const auto tail = MaxTail::compute(t, law);
  AuxiliaryConfig a;
  a.t = t;
  a.mode = AuxiliaryMode::extrema;
  a.level = y;
  a.window_lo = -c["window_c"].get<double>() * std::sqrt(t);
  a.window_hi = 0.0;
  a.seed = seed_of(c);
  const double z = c["z"].get<double>();
  const auto samples = map_replicas(replicas_of(c), [&](std::size_t i) {
    return sample_auxiliary(z, a, i, law, &tail);
  }, out.jobs());
  const auto r = atom_window_diagnostic(t, y, samples, c["c1"].get<double>(), c["c2"].get<double>(),
                                        c["bin_width"].get<double>(), c["min_atoms"].get<std::size_t>());
  Json summary = {{"t", t}, {"y", y}, {"window", {a.lo(), a.hi()}}, {"contributing", r.contributing},
                  {"underpowered", r.underpowered}, {"c1", r.c1}, {"c2", r.c2}};
  if (!r.underpowered) {
    summary["histogram_mode"] = *r.histogram_mode;
    summary["mass_outside"] = *r.mass_outside;
    summary["ks_to_density"] = *r.ks_to_density;
    Table h{{"bin_lo", "bin_hi", "count"}, {}};
    for (std::size_t k = 0; k < r.counts.size(); ++k) h.rows.push_back({r.bin_edges[k], r.bin_edges[k + 1], r.counts[k]});
    out.table("histogram", h);
  }
  out.json("report.json", summary);
  return {kExitOk, summary};
}

CommandOutcome superposition(const Json& c, Artifacts& out) {
  SuperpositionConfig s;
  s.starts = c["starts"].get<std::vector<double>>();
  s.t = c["t"].get<double>();
  s.replicas = replicas_of(c);
  s.prune_gap = opt(c["prune_gap"]);
  s.front_depth = c["front_depth"].get<double>();
  s.seed = seed_of(c);
  s.jobs = out.jobs();
  const auto r = superposition_check(s, law_from_json(c["offspring"]));
  const auto j = Json::parse(superposition_json(r));
  out.json("report.json", j);
  return {kExitOk, j};
}

CommandOutcome report(const Json& c, Artifacts& out) {
  const auto dir = c["dir"].get<std::string>();
  if (dir.empty()) throw ConfigError("dir: directory with criterion reports required");
  auto summary = aggregate_reports(dir);
  out.json("summary.json", summary);
  return {summary["all_pass"].get<bool>() ? kExitOk : kExitCriterionFailed, summary};
}

}  // namespace

BranchingLaw law_from_json(const Json& offspring) {
  std::map<int, double> probs;
  for (const auto& [k, v] : offspring.items()) {
    std::size_t used = 0;
    int count = 0;
    try {
      count = std::stoi(k, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != k.size()) throw ConfigError("offspring: keys must be integers, got " + k);
    probs[count] = v.get<double>();
  }
  return BranchingLaw(probs);
}

std::vector<PointConfiguration> sample_extremal(double t, std::size_t replicas, std::uint64_t seed,
                                                std::optional<double> prune_gap, int jobs,
                                                const BranchingLaw& law) {
  SimConfig sim;
  sim.horizon = t;
  sim.seed = seed;
  sim.prune_gap = prune_gap;
  const double m = centering_m(t);
  return map_replicas(replicas, [&](std::size_t r) {
    const auto res = simulate(sim, law, r);
    if (res.partial()) throw Error("sample_extremal: population cap exceeded");
    const auto& s = res.final_snapshot();
    return s.empty() ? PointConfiguration() : extremal_points(s, m);
  }, jobs);
}

std::vector<SolutionField> heaviside_fields(const Grid& grid, std::vector<double> times, Convention convention,
                                            const BranchingLaw& law, int jobs) {
  if (times.empty()) throw std::invalid_argument("heaviside_fields: no times");
  std::sort(times.begin(), times.end());
  SolveOptions o;
  o.output = convention;
  o.jobs = jobs;
  return solve(InitialCondition::heaviside(), law, grid, times.back(), times, o);
}

Json aggregate_reports(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("report: no such directory " + dir.string());
  std::vector<std::pair<int, Json>> found;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (!name.starts_with("criterion_") || e.path().extension() != ".json") continue;
    std::ifstream in(e.path());
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
      throw Error("report: malformed " + name + ": " + ex.what());
    }
    found.emplace_back(j.at("id").get<int>(), std::move(j));
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Json summary;
  Json criteria = Json::array();
  bool all = !found.empty();
  for (auto& [id, j] : found) {
    criteria.push_back({{"id", id}, {"name", j.value("name", "")}, {"pass", j.at("pass").get<bool>()}});
    all = all && j["pass"].get<bool>();
  }
  summary["criteria"] = criteria;
  std::size_t passed = 0;
  for (const auto& f : found) passed += f.second["pass"].get<bool>() ? 1 : 0;
  summary["passed"] = passed;
  summary["total"] = found.size();
  summary["all_pass"] = all;
  return summary;
}

CommandOutcome run_command(const std::string& command, const Json& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (command == "verify-manifest") {
    const auto path = config.at("manifest").get<std::string>();
    if (path.empty()) throw ConfigError("manifest: path required");
    const auto check = verify_manifest(path);
    Json summary = {{"ok", check.ok}, {"missing", check.missing}, {"mismatched", check.mismatched}};
    return {check.ok ? kExitOk : kExitCriterionFailed, summary};
  }
  Artifacts out(options);
  CommandOutcome r;
  if (command == "simulate-bbm") {
    r = simulate_bbm(config, out);
  } else if (command == "solve-fkpp") {
    r = solve_fkpp(config, out);
  } else if (command == "sample-z") {
    r = sample_z(config, out);
  } else if (command == "sample-aux") {
    r = sample_aux(config, out);
  } else if (command == "sample-cluster") {
    r = sample_cluster(config, out);
  } else if (command == "compare-laplace") {
    r = compare_laplace(config, out);
  } else if (command == "max-law") {
    r = max_law(config, out);
  } else if (command == "genealogy-diagnostic") {
    r = genealogy_diagnostic(config, out);
  } else if (command == "atom-window") {
    r = atom_window(config, out);
  } else if (command == "superposition") {
    r = superposition(config, out);
  } else if (command == "report") {
    r = report(config, out);
  } else {
    throw ConfigError("unknown command " + command);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out.finish(command, config, r.summary, r.exit_code, seconds);
}

}  // namespace bbmlab
