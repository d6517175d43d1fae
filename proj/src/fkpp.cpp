#include "bbmlab/fkpp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bbmlab/engine.hpp"
#include "bbmlab/error.hpp"
#include "bbmlab/parallel.hpp"
#include "bbmlab/rng.hpp"
#include "bbmlab/snapshot_io.hpp"
#include "json.hpp"

namespace bbmlab {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kLogCoefficient = 1.5 / std::numbers::sqrt2;  // 3 / (2 sqrt 2)
constexpr double kClipTolerance = 1e-6;
}  // namespace

// ---------------------------------------------------------------- grid, ic

std::size_t Grid::size() const {
  return static_cast<std::size_t>(std::llround((x_max - x_min) / dx)) + 1;
}

double Grid::speed() const { return frame == Frame::comoving ? kSqrt2 : 0.0; }

void Grid::validate() const {
  if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw std::invalid_argument("grid: need finite x_min < x_max");
  }
  if (!(dx > 0.0) || !(dt > 0.0)) throw std::invalid_argument("grid: dx and dt must be positive");
  if (size() < 5) throw std::invalid_argument("grid: fewer than 5 points");
  if (dx * speed() >= 1.0) throw std::invalid_argument("grid: dx too coarse for the frame speed");
}

InitialCondition InitialCondition::heaviside(double at) {
  InitialCondition ic;
  ic.kind_ = Kind::heaviside;
  ic.at_ = at;
  return ic;
}

InitialCondition InitialCondition::exp_phi(TestFunction phi) {
  InitialCondition ic;
  ic.kind_ = Kind::exp_phi;
  ic.phi_ = phi;
  return ic;
}

InitialCondition InitialCondition::exp_phi_cutoff(TestFunction phi, double delta) {
  if (!std::isfinite(delta)) throw std::invalid_argument("cutoff: delta must be finite");
  InitialCondition ic;
  ic.kind_ = Kind::exp_phi_cutoff;
  ic.phi_ = phi;
  ic.at_ = delta;
  return ic;
}

InitialCondition InitialCondition::tabulated(std::vector<double> values, Convention convention) {
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("initial condition: values must lie in [0, 1]");
  }
  InitialCondition ic;
  ic.kind_ = Kind::tabulated;
  ic.table_ = std::move(values);
  ic.table_convention_ = convention;
  return ic;
}

InitialCondition InitialCondition::constant(double value, Convention convention, std::size_t size) {
  return tabulated(std::vector<double>(size, value), convention);
}

std::vector<double> InitialCondition::v_values(const Grid& grid) const {
  const std::size_t n = grid.size();
  std::vector<double> v(n);
  // Fraction of the cell around x_i lying below `edge`.
  auto below = [&](std::size_t i, double edge) {
    return std::clamp((edge - (grid.x(i) - 0.5 * grid.dx)) / grid.dx, 0.0, 1.0);
  };
  switch (kind_) {
    case Kind::heaviside:
      for (std::size_t i = 0; i < n; ++i) v[i] = below(i, at_);
      break;
    case Kind::exp_phi:
      for (std::size_t i = 0; i < n; ++i) v[i] = -std::expm1(-(*phi_)(-grid.x(i)));
      break;
    case Kind::exp_phi_cutoff:
      for (std::size_t i = 0; i < n; ++i) {
        const double a = below(i, -at_);
        v[i] = a + (1.0 - a) * -std::expm1(-(*phi_)(-grid.x(i)));
      }
      break;
    case Kind::tabulated:
      if (table_.size() != n) throw std::invalid_argument("initial condition: table size differs from grid");
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = table_convention_ == Convention::v ? table_[i] : 1.0 - table_[i];
      }
      break;
  }
  return v;
}

std::string InitialCondition::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::heaviside: os << "heaviside(" << at_ << ')'; break;
    case Kind::exp_phi: os << "exp_phi(" << phi_->describe() << ')'; break;
    case Kind::exp_phi_cutoff: os << "exp_phi_cutoff(" << phi_->describe() << ",delta=" << at_ << ')'; break;
    case Kind::tabulated: os << "tabulated"; break;
  }
  return os.str();
}

// ---------------------------------------------------------------- fields

double SolutionField::frame_shift() const { return grid.speed() * time; }

double SolutionField::lab_x(std::size_t i) const { return x(i) + frame_shift(); }

SolutionField SolutionField::in_convention(Convention c) const {
  if (c == convention) return *this;
  SolutionField f = *this;
  f.convention = c;
  for (double& x : f.values) x = 1.0 - x;
  return f;
}

double SolutionField::v_at(double xq) const {
  const double s = (xq - grid.x_min) / grid.dx;
  if (s <= 0.0) return v(0);
  const std::size_t n = values.size();
  if (s >= static_cast<double>(n - 1)) return v(n - 1);
  const auto i = static_cast<std::size_t>(s);
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * v(i) + w * v(i + 1);
}

bool SolutionField::monotone(double tolerance) const {
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if (u(i + 1) < u(i) - tolerance) return false;
  }
  return true;
}

// ---------------------------------------------------------------- solver

namespace {

// Tridiagonal operator A = 1/2 d_xx + c d_x. The two end nodes carry no
// transport: they follow the reaction ODE alone, which pins the stable states
// of Heaviside-type data and keeps spatially uniform data exactly uniform.
struct Operator {
  double lower;
  double diag;
  double upper;
  std::size_t n;

  Operator(const Grid& g)
      : lower(0.5 / (g.dx * g.dx) - g.speed() / (2.0 * g.dx)),
        diag(-1.0 / (g.dx * g.dx)),
        upper(0.5 / (g.dx * g.dx) + g.speed() / (2.0 * g.dx)),
        n(g.size()) {}

  bool pinned(std::size_t i) const { return i == 0 || i + 1 == n; }
  double lower_at(std::size_t i) const { return pinned(i) ? 0.0 : lower; }
  double diag_at(std::size_t i) const { return pinned(i) ? 0.0 : diag; }
  double upper_at(std::size_t i) const { return pinned(i) ? 0.0 : upper; }

  // out = v + k A v
  void apply(std::span<const double> v, double k, std::span<double> out) const {
    out[0] = v[0];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      out[i] = v[i] + k * (lower * v[i - 1] + diag * v[i] + upper * v[i + 1]);
    }
    out[n - 1] = v[n - 1];
  }
};

// Prefactored Thomas solver for (I - k A) x = rhs.
class ImplicitSolver {
 public:
  ImplicitSolver(const Operator& a, double k) : n_(a.n), sub_(a.n), cp_(a.n), inv_(a.n) {
    for (std::size_t i = 0; i < n_; ++i) {
      sub_[i] = i == 0 ? 0.0 : -k * a.lower_at(i);
      const double d = 1.0 - k * a.diag_at(i);
      const double sup = i + 1 == n_ ? 0.0 : -k * a.upper_at(i);
      const double denom = i == 0 ? d : d - sub_[i] * cp_[i - 1];
      inv_[i] = 1.0 / denom;
      cp_[i] = sup * inv_[i];
    }
  }

  void solve(std::span<double> x) const {
    x[0] *= inv_[0];
    for (std::size_t i = 1; i < n_; ++i) x[i] = (x[i] - sub_[i] * x[i - 1]) * inv_[i];
    for (std::size_t i = n_ - 1; i-- > 0;) x[i] -= cp_[i] * x[i + 1];
  }

 private:
  std::size_t n_;
  std::vector<double> sub_, cp_, inv_;
};

double reaction_rate(double v, const BranchingLaw& law) {
  return (1.0 - v) - law.generating(1.0 - v);
}

double react_point(double v, const BranchingLaw& law, double h, double growth) {
  if (law.is_binary()) return v * growth / (1.0 + v * (growth - 1.0));
  const double k1 = reaction_rate(v, law);
  const double k2 = reaction_rate(v + 0.5 * h * k1, law);
  const double k3 = reaction_rate(v + 0.5 * h * k2, law);
  const double k4 = reaction_rate(v + h * k3, law);
  return v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Rightmost u = level crossing in grid coordinates, if any.
std::optional<double> crossing(std::span<const double> v, const Grid& g, double level_u) {
  const double level_v = 1.0 - level_u;
  for (std::size_t i = v.size() - 1; i-- > 0;) {
    // u_i < level <= u_{i+1}  <=>  v_i > level_v >= v_{i+1}
    if (v[i] > level_v && v[i + 1] <= level_v) {
      const double w = (v[i] - level_v) / (v[i] - v[i + 1]);
      return g.x(i) + w * g.dx;
    }
  }
  return std::nullopt;
}

}  // namespace

void react_serial(std::span<double> v, const BranchingLaw& law, double h) {
  const double growth = std::exp(h);
  for (double& x : v) x = react_point(x, law, h, growth);
}

void react(std::span<double> v, const BranchingLaw& law, double h, int jobs) {
  const double growth = std::exp(h);
  const auto n = static_cast<long long>(v.size());
  const int threads = effective_jobs(jobs);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long long i = 0; i < n; ++i) {
    v[static_cast<std::size_t>(i)] = react_point(v[static_cast<std::size_t>(i)], law, h, growth);
  }
}

std::vector<SolutionField> solve(const InitialCondition& ic, const BranchingLaw& law, const Grid& grid,
                                 double T, std::vector<double> snapshot_times,
                                 const SolveOptions& options) {
  grid.validate();
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("solve: T must be finite and >= 0");
  if (snapshot_times.empty()) snapshot_times.push_back(T);
  if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end()) || snapshot_times.front() < 0.0 ||
      snapshot_times.back() > T + 1e-12) {
    throw std::invalid_argument("solve: snapshot times must be sorted within [0, T]");
  }

  std::vector<double> v = ic.v_values(grid);
  for (double x : v) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("solve: initial values outside [0, 1]");
  }
  const bool check_monotone = options.assert_monotone && ic.kind() == InitialCondition::Kind::heaviside;

  const double h = grid.dt;
  const double gamma = 2.0 - kSqrt2;
  const Operator op(grid);
  const ImplicitSolver tr(op, 0.5 * gamma * h);
  const ImplicitSolver bdf(op, (1.0 - gamma) / (2.0 - gamma) * h);
  const ImplicitSolver euler(op, 0.5 * h);
  const double w1 = 1.0 / (gamma * (2.0 - gamma));
  const double w0 = (1.0 - gamma) * (1.0 - gamma) / (gamma * (2.0 - gamma));

  std::vector<double> stage(v.size());
  double clipped = 0.0;
  const auto steps_per_unit = std::max<long long>(1, std::llround(1.0 / h));

  auto emit = [&](double time) {
    SolutionField f;
    f.time = time;
    f.grid = grid;
    f.convention = Convention::v;
    f.values = v;
    f.clipped_excursion = clipped;
    if (check_monotone && !f.monotone()) {
      throw InstabilityError("solve: Heaviside solution lost monotonicity at t=" + format_double(time));
    }
    return options.output == Convention::u ? f.in_convention(Convention::u) : f;
  };

  auto monitor = [&](double time) {
    if (!options.monitor_boundary) return;
    const auto front = crossing(v, grid, 0.5);
    if (!front) return;
    if (*front - grid.x_min < options.boundary_margin || grid.x_max - *front < options.boundary_margin) {
      throw Error("solve: front at x=" + format_double(*front) + " within " +
                  format_double(options.boundary_margin) + " of the domain boundary at t=" +
                  format_double(time));
    }
  };

  std::vector<SolutionField> out;
  std::size_t next = 0;
  long long step = 0;
  auto emit_due = [&](double now) {
    while (next < snapshot_times.size() && std::llround(snapshot_times[next] / h) <= step) {
      const double requested = snapshot_times[next];
      out.push_back(emit(std::fabs(requested - now) < 1e-9 ? requested : now));
      ++next;
    }
  };
  emit_due(0.0);
  const long long total = std::llround(T / h);
  while (step < total) {
    react(v, law, 0.5 * h, options.jobs);
    if (step < options.smoothing_steps) {
      euler.solve(v);
      euler.solve(v);
    } else {
      op.apply(v, 0.5 * gamma * h, stage);
      tr.solve(stage);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = w1 * stage[i] - w0 * v[i];
      bdf.solve(v);
    }
    react(v, law, 0.5 * h, options.jobs);
    ++step;
    const double now = static_cast<double>(step) * h;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double& x = v[i];
      if (x < 0.0 || x > 1.0) {
        const double excess = x < 0.0 ? -x : x - 1.0;
        if (!(excess <= kClipTolerance)) {
          std::ostringstream os;
          os << "solve: value " << x << " at x=" << grid.x(i) << ", t=" << now
             << " outside [-1e-6, 1+1e-6]; reduce dt or dx";
          throw InstabilityError(os.str());
        }
        clipped = std::max(clipped, excess);
        x = std::clamp(x, 0.0, 1.0);
      }
    }
    if (step % steps_per_unit == 0) monitor(now);
    emit_due(now);
  }
  return out;
}

// ---------------------------------------------------------------- fronts

double front_position(const SolutionField& field, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("front_position: level must lie in (0, 1)");
  const auto fv = field.in_convention(Convention::v);
  const auto x = crossing(fv.values, field.grid, level);
  if (!x) throw NoCrossingError("front_position: no crossing of level " + format_double(level));
  return *x;
}

double front_position_lab(const SolutionField& field, double level) {
  return front_position(field, level) + field.frame_shift();
}

double WaveProfile::at(double xq) const {
  if (x.empty()) throw std::invalid_argument("wave profile: empty");
  if (xq <= x.front()) return omega.front();
  if (xq >= x.back()) return omega.back();
  const double s = (xq - x.front()) / dx;
  const auto i = std::min(static_cast<std::size_t>(s), x.size() - 2);
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * omega[i] + w * omega[i + 1];
}

bool WaveProfile::nondecreasing(double tolerance) const {
  for (std::size_t i = 0; i + 1 < omega.size(); ++i) {
    if (omega[i + 1] < omega[i] - tolerance) return false;
  }
  return true;
}

WaveProfile centered_profile(const SolutionField& field, Centering centering) {
  WaveProfile p;
  p.centering = centering;
  p.time = field.time;
  p.dx = field.grid.dx;
  p.center = centering == Centering::by_median ? front_position(field, 0.5)
                                               : centering_m(field.time) - field.frame_shift();
  p.x.reserve(field.size());
  p.omega.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    p.x.push_back(field.x(i) - p.center);
    p.omega.push_back(field.u(i));
  }
  return p;
}

WaveProfile wave_profile(const SolutionField& earlier, const SolutionField& later, Centering centering) {
  if (earlier.time < 30.0 || later.time < 30.0) {
    throw std::invalid_argument("wave_profile: both times must be >= 30");
  }
  if (later.time < earlier.time) throw std::invalid_argument("wave_profile: fields out of order");
  const WaveProfile a = centered_profile(earlier, centering);
  WaveProfile b = centered_profile(later, centering);
  const double lo = std::max(a.x.front(), b.x.front());
  const double hi = std::min(a.x.back(), b.x.back());
  // Skip interpolation when both profiles share their nodes.
  const bool same_nodes = a.x == b.x;
  double sup = 0.0;
  for (std::size_t i = 0; i < b.x.size(); ++i) {
    if (b.x[i] < lo || b.x[i] > hi) continue;
    const double ref = same_nodes ? a.omega[i] : a.at(b.x[i]);
    sup = std::max(sup, std::fabs(b.omega[i] - ref));
  }
  b.discrepancy = sup;
  b.converged = sup <= 0.01;
  return b;
}

ShiftFit fit_shift(const WaveProfile& a, const WaveProfile& b, double lo, double hi) {
  auto sup = [&](double s) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.x.size(); ++i) {
      if (a.x[i] < lo || a.x[i] > hi) continue;
      d = std::max(d, std::fabs(a.omega[i] - b.at(a.x[i] + s)));
    }
    return d;
  };
  double best = 0.0;
  double best_val = sup(0.0);
  for (double s = -5.0; s <= 5.0; s += 0.01) {
    const double val = sup(s);
    if (val < best_val) {
      best_val = val;
      best = s;
    }
  }
  double l = best - 0.01, r = best + 0.01;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double m1 = r - phi * (r - l);
    const double m2 = l + phi * (r - l);
    if (sup(m1) < sup(m2)) {
      r = m2;
    } else {
      l = m1;
    }
  }
  const double s = 0.5 * (l + r);
  const double val = sup(s);
  return val < best_val ? ShiftFit{s, val} : ShiftFit{best, best_val};
}

double wave_ode_residual(const WaveProfile& profile, const BranchingLaw& law, double lo, double hi) {
  const auto& w = profile.omega;
  const double dx = profile.dx;
  double sum = 0.0;
  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    if (profile.x[i] < lo || profile.x[i] > hi) continue;
    const double d2 = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (dx * dx);
    const double d1 = (w[i + 1] - w[i - 1]) / (2.0 * dx);
    const double r = 0.5 * d2 + kSqrt2 * d1 + law.generating(w[i]) - w[i];
    sum += r * r;
  }
  return std::sqrt(dx * sum);
}

// ---------------------------------------------------------------- tails

TailFit tail_constant(std::span<const double> x, std::span<const double> one_minus_omega, double x_lo,
                      double x_hi) {
  if (!(x_lo > 0.0 && x_lo < x_hi)) throw std::invalid_argument("tail_constant: need 0 < x_lo < x_hi");
  std::vector<double> ratios;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < x_lo || x[i] > x_hi) continue;
    if (!(one_minus_omega[i] > 0.0)) continue;
    ratios.push_back(one_minus_omega[i] / (x[i] * std::exp(-kSqrt2 * x[i])));
  }
  TailFit fit;
  fit.points = ratios.size();
  if (ratios.empty()) return fit;
  double log_sum = 0.0;
  for (double r : ratios) log_sum += std::log(r);
  fit.constant = std::exp(log_sum / static_cast<double>(ratios.size()));
  const auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
  fit.relative_variation = (*mx - *mn) / fit.constant;
  fit.reliable = fit.points >= 3 && fit.relative_variation <= 0.10;
  return fit;
}

TailFit tail_constant(const WaveProfile& profile, double x_lo, double x_hi) {
  std::vector<double> tail(profile.omega.size());
  for (std::size_t i = 0; i < tail.size(); ++i) tail[i] = 1.0 - profile.omega[i];
  return tail_constant(profile.x, tail, x_lo, x_hi);
}

double tail_integral(const SolutionField& field) {
  const double offset = field.frame_shift() - kSqrt2 * field.time;
  double sum = 0.0;
  double peak = 0.0;
  double prev_y = 0.0, prev_f = 0.0;
  bool started = false;
  double last_f = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double y = field.x(i) + offset;
    if (y < 0.0) continue;
    const double v = field.v(i);
    const double f = v > 0.0 ? std::exp(std::log(v) + kSqrt2 * y) * y : 0.0;
    if (started) sum += 0.5 * (f + prev_f) * (y - prev_y);
    started = true;
    prev_y = y;
    prev_f = f;
    peak = std::max(peak, f);
    last_f = f;
  }
  if (peak > 0.0 && last_f > 1e-10 * peak) {
    throw Error("tail_integral: integrand not negligible at the right boundary; widen the domain");
  }
  return std::sqrt(2.0 / std::numbers::pi) * sum;
}

LaplaceConstant laplace_constant(const TestFunction& phi, std::optional<double> delta,
                                 const LaplaceConstantSettings& settings, const BranchingLaw& law) {
  if (!(settings.t1 > 0.0 && settings.t1 < settings.t2)) {
    throw std::invalid_argument("laplace_constant: need 0 < t1 < t2");
  }
  const InitialCondition ic =
      delta ? InitialCondition::exp_phi_cutoff(phi, *delta) : InitialCondition::exp_phi(phi);
  SolveOptions opts;
  opts.output = Convention::v;
  opts.jobs = settings.jobs;
  const auto fields = solve(ic, law, settings.grid, settings.t2, {settings.t1, settings.t2}, opts);
  LaplaceConstant c;
  c.phi = phi.describe();
  c.delta = delta;
  c.t1 = settings.t1;
  c.t2 = settings.t2;
  c.value_early = tail_integral(fields[0]);
  c.value = tail_integral(fields[1]);
  c.drift = c.value == 0.0 ? 0.0 : std::fabs(c.value - c.value_early) / std::fabs(c.value);
  const auto g = [](double t) { return std::log(t) / std::sqrt(t); };
  const double slope = (c.value - c.value_early) / (g(c.t2) - g(c.t1));
  c.extrapolated = c.value - slope * g(c.t2);
  c.converged = c.drift <= 0.05;
  return c;
}

// ---------------------------------------------------------------- psi

bool psi_valid(double r, double t, double X) {
  return t >= 8.0 * r && X >= 8.0 * r - kLogCoefficient * std::log(t);
}

namespace {
// e^{log_scale} psi(r, t, X + sqrt2 t); the scale enters the exponent so that
// large prefactors never overflow.
double psi_scaled(const SolutionField& field_r, double r, double t, double X, double log_scale) {
  if (!(t > r)) throw std::invalid_argument("psi_approx: need t > r");
  const double span = t - r;
  const double offset = field_r.frame_shift() - kSqrt2 * r;
  const double shifted = X + kLogCoefficient * std::log(t);
  double sum = 0.0, peak = 0.0, last = 0.0;
  double prev_y = 0.0, prev_f = 0.0;
  bool started = false;
  for (std::size_t i = 0; i < field_r.size(); ++i) {
    const double y = field_r.x(i) + offset;
    if (y < 0.0) continue;
    const double v = field_r.v(i);
    double f = 0.0;
    if (v > 0.0) {
      const double log_f =
          std::log(v) + kSqrt2 * y - kSqrt2 * X - (y - X) * (y - X) / (2.0 * span) + log_scale;
      f = std::exp(log_f) * -std::expm1(-2.0 * y * shifted / span);
    }
    if (started) sum += 0.5 * (f + prev_f) * (y - prev_y);
    started = true;
    prev_y = y;
    prev_f = f;
    peak = std::max(peak, std::fabs(f));
    last = std::fabs(f);
  }
  if (peak > 0.0 && last > 1e-10 * peak) {
    throw Error("psi_approx: integrand not negligible at the right boundary; widen the domain");
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * span);
}
}  // namespace

double psi_approx(const SolutionField& field_r, double r, double t, double X) {
  return psi_scaled(field_r, r, t, X, 0.0);
}

double bridge_below_line_prob(double A, double B, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("bridge_below_line_prob: t must be > 0");
  if (!(A >= 0.0 && B >= 0.0)) throw std::invalid_argument("bridge_below_line_prob: need A, B >= 0");
  return -std::expm1(-2.0 * A * B / t);
}

BridgeMonteCarlo bridge_monte_carlo(double A, double B, double t, std::size_t bridges, std::size_t steps,
                                    std::uint64_t seed) {
  if (bridges < 2 || steps < 1) throw std::invalid_argument("bridge_monte_carlo: need >= 2 bridges and >= 1 step");
  const double h = t / static_cast<double>(steps);
  const auto weights = map_replicas(bridges, [&](std::size_t b) {
    RngStream rng(seed, b, domain::kMonteCarlo);
    double x = A;
    double weight = 1.0;
    for (std::size_t k = 0; k < steps; ++k) {
      const double remaining = t - static_cast<double>(k) * h;
      double next = B;
      if (k + 1 < steps) {
        const double mean = x + (B - x) * h / remaining;
        const double sd = std::sqrt(h * (remaining - h) / remaining);
        next = mean + sd * rng.normal();
      }
      if (x <= 0.0 || next <= 0.0) return 0.0;
      weight *= -std::expm1(-2.0 * x * next / h);
      x = next;
    }
    return weight;
  });
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  const double n = static_cast<double>(bridges);
  const double mean = s / n;
  BridgeMonteCarlo mc;
  mc.estimate = mean;
  mc.std_error = std::sqrt(std::max(0.0, s2 / n - mean * mean) / (n - 1.0));
  mc.bridges = bridges;
  mc.steps = steps;
  return mc;
}

double gumbel_mixture_cdf(double x, double C, std::span<const double> z_samples) {
  if (z_samples.empty()) throw std::invalid_argument("gumbel_mixture_cdf: no Z samples");
  if (!(C > 0.0)) throw std::invalid_argument("gumbel_mixture_cdf: C must be > 0");
  const double scale = C * std::exp(-kSqrt2 * x);
  double s = 0.0;
  for (double z : z_samples) s += std::exp(-scale * z);
  return s / static_cast<double>(z_samples.size());
}

namespace {
TailAsymptotics summarize_sequence(std::span<const double> times, std::vector<double> values) {
  TailAsymptotics out;
  out.times.assign(times.begin(), times.end());
  out.values = std::move(values);
  if (!out.values.empty()) out.limit_estimate = out.values.back();
  if (out.values.size() >= 2) {
    const double prev = out.values[out.values.size() - 2];
    out.last_ratio = prev == 0.0 ? (out.values.back() == 0.0 ? 1.0 : 0.0) : out.values.back() / prev;
    out.stabilized = std::fabs(out.last_ratio - 1.0) < 1e-2;
  }
  return out;
}
}  // namespace

TailAsymptotics front_tail_fixed_x(const SolutionField& field_r, double r, std::span<const double> times,
                                   double x) {
  std::vector<double> values;
  for (double t : times) {
    values.push_back(psi_scaled(field_r, r, t, x, kSqrt2 * x + 1.5 * std::log(t) - std::log(std::log(t))));
  }
  return summarize_sequence(times, std::move(values));
}

TailAsymptotics front_tail_scaled(const SolutionField& field_r, double r, std::span<const double> times,
                                  double a, double Y) {
  std::vector<double> values;
  for (double t : times) {
    const double x = a * std::sqrt(t);
    values.push_back(psi_scaled(field_r, r, t, x + Y, kSqrt2 * x + 1.5 * std::log(t) - std::log(x)));
  }
  return summarize_sequence(times, std::move(values));
}

double front_tail_fixed_x_limit(const SolutionField& field_r) {
  return 1.5 / std::sqrt(std::numbers::pi) * std::sqrt(std::numbers::pi / 2.0) * tail_integral(field_r);
}

std::vector<std::pair<double, double>> max_law_table(const SolutionField& field, double x_lo, double x_hi,
                                                     double step) {
  if (!(step > 0.0) || !(x_lo <= x_hi)) throw std::invalid_argument("max_law_table: bad range");
  const double base = centering_m(field.time) - field.frame_shift();
  std::vector<std::pair<double, double>> out;
  const auto n = static_cast<long long>(std::floor((x_hi - x_lo) / step + 1e-9));
  for (long long k = 0; k <= n; ++k) {
    const double x = x_lo + static_cast<double>(k) * step;
    out.emplace_back(x, field.u_at(base + x));
  }
  return out;
}

// ---------------------------------------------------------------- I/O

void write_field_csv(std::ostream& out, const SolutionField& field, bool lab_coordinates) {
  out << "x,value\n";
  for (std::size_t i = 0; i < field.size(); ++i) {
    out << format_double(lab_coordinates ? field.lab_x(i) : field.x(i)) << ','
        << format_double(field.values[i]) << '\n';
  }
}

std::string field_sidecar_json(const SolutionField& field, const std::string& ic, const std::string& law) {
  nlohmann::ordered_json j;
  j["time"] = field.time;
  j["convention"] = field.convention == Convention::u ? "u" : "v";
  j["frame"] = field.grid.frame == Frame::comoving ? "comoving" : "lab";
  j["frame_shift"] = field.frame_shift();
  j["grid"] = {{"x_min", field.grid.x_min}, {"x_max", field.grid.x_max}, {"dx", field.grid.dx},
               {"dt", field.grid.dt}, {"points", field.size()}};
  j["scheme"] = "strang(reaction, tr-bdf2 diffusion, reaction); implicit-euler start; reaction-only end nodes";
  j["initial_condition"] = ic;
  j["law"] = law;
  j["clipped_excursion"] = field.clipped_excursion;
  return j.dump(2);
}

void write_profile_csv(std::ostream& out, const WaveProfile& profile) {
  out << "x,omega\n";
  for (std::size_t i = 0; i < profile.x.size(); ++i) {
    out << format_double(profile.x[i]) << ',' << format_double(profile.omega[i]) << '\n';
  }
}

}  // namespace bbmlab
