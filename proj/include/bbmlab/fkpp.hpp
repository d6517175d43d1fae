#pragma once

// F-KPP solver u_t = 1/2 u_xx + sum_k p_k u^k - u.
//
// Internally the solver evolves v = 1 - u, which is small ahead of the front
// and keeps its relative precision deep into the tail. One step is Strang
// splitting: half reaction, diffusion (plus advection at sqrt2 in the
// co-moving frame) by TR-BDF2, half reaction. The first steps use implicit
// Euler to damp the discontinuity of Heaviside data. The end nodes evolve by
// the reaction alone, which pins u = 0 (left) and u = 1 (right) for Heaviside
// data. Zero-flux ends are avoided: next to the unstable state they carry a
// growing boundary mode.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bbmlab/branching_law.hpp"
#include "bbmlab/pointproc.hpp"

namespace bbmlab {

enum class Frame { lab, comoving };
enum class Convention { u, v };

struct Grid {
  double x_min = -40.0;
  double x_max = 40.0;
  double dx = 0.02;
  double dt = 0.01;
  Frame frame = Frame::comoving;

  std::size_t size() const;
  double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx; }
  // Advection speed of the frame (sqrt2 when co-moving).
  double speed() const;
  void validate() const;
};

class InitialCondition {
 public:
  enum class Kind { heaviside, exp_phi, exp_phi_cutoff, tabulated };

  // u(0, x) = 1{x >= at}, initialized by cell averages.
  static InitialCondition heaviside(double at = 0.0);
  // u(0, x) = exp(-phi(-x)).
  static InitialCondition exp_phi(TestFunction phi);
  // u(0, x) = exp(-phi(-x)) 1{-x <= delta}.
  static InitialCondition exp_phi_cutoff(TestFunction phi, double delta);
  // Values on the solver grid, in the given convention.
  static InitialCondition tabulated(std::vector<double> values, Convention convention);
  static InitialCondition constant(double value, Convention convention, std::size_t size);

  Kind kind() const { return kind_; }
  std::vector<double> v_values(const Grid& grid) const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::heaviside;
  std::optional<TestFunction> phi_;
  double at_ = 0.0;
  std::vector<double> table_;
  Convention table_convention_ = Convention::u;
};

struct SolutionField {
  double time = 0.0;
  Grid grid;
  Convention convention = Convention::u;
  std::vector<double> values;
  // Largest excursion outside [0, 1] that was clipped (<= 1e-6).
  double clipped_excursion = 0.0;

  std::size_t size() const { return values.size(); }
  double x(std::size_t i) const { return grid.x(i); }
  // Lab coordinate of grid point i.
  double lab_x(std::size_t i) const;
  double frame_shift() const;
  double u(std::size_t i) const { return convention == Convention::u ? values[i] : 1.0 - values[i]; }
  double v(std::size_t i) const { return convention == Convention::v ? values[i] : 1.0 - values[i]; }
  SolutionField in_convention(Convention c) const;
  // Linear interpolation of v at a grid-frame coordinate; boundary values
  // outside the domain.
  double v_at(double x) const;
  double u_at(double x) const { return 1.0 - v_at(x); }
  bool monotone(double tolerance = 1e-10) const;
};

struct SolveOptions {
  Convention output = Convention::u;
  int smoothing_steps = 4;
  bool monitor_boundary = true;
  double boundary_margin = 10.0;
  // Throw InstabilityError when a snapshot of Heaviside data loses
  // monotonicity.
  bool assert_monotone = true;
  int jobs = 1;
};

// Fields at each requested time (sorted, in [0, T]); T itself is appended when
// snapshot_times is empty. Throws InstabilityError on excursions beyond 1e-6
// and Error when the front comes within boundary_margin of the domain edge.
std::vector<SolutionField> solve(const InitialCondition& ic, const BranchingLaw& law, const Grid& grid,
                                 double T, std::vector<double> snapshot_times = {},
                                 const SolveOptions& options = {});

// Reaction sweep over v for one sub-step h: OpenMP kernel and serial
// reference (identical results).
void react(std::span<double> v, const BranchingLaw& law, double h, int jobs);
void react_serial(std::span<double> v, const BranchingLaw& law, double h);

// Grid-frame x with u(x) = level by linear interpolation (rightmost crossing
// from below). Throws NoCrossingError.
double front_position(const SolutionField& field, double level = 0.5);
double front_position_lab(const SolutionField& field, double level = 0.5);

enum class Centering { by_m, by_median };

struct WaveProfile {
  std::vector<double> x;      // centered coordinates
  std::vector<double> omega;  // u values
  Centering centering = Centering::by_median;
  double center = 0.0;  // grid-frame coordinate mapped to 0
  double time = 0.0;
  double dx = 0.0;
  double discrepancy = 0.0;  // sup norm against the earlier profile
  bool converged = true;

  double at(double x) const;  // linear interpolation, clamped
  bool nondecreasing(double tolerance = 1e-10) const;
};

// Recenter a single field.
WaveProfile centered_profile(const SolutionField& field, Centering centering);
// Later profile with its sup discrepancy against the earlier one; both
// times must be >= 30. Flags unconverged above 0.01.
WaveProfile wave_profile(const SolutionField& earlier, const SolutionField& later,
                         Centering centering = Centering::by_median);

// Sup difference between two profiles after the best constant shift.
struct ShiftFit {
  double shift = 0.0;
  double sup_difference = 0.0;
};
ShiftFit fit_shift(const WaveProfile& a, const WaveProfile& b, double lo = -10.0, double hi = 10.0);

// Discrete L2 norm of 1/2 w'' + sqrt2 w' + sum p_k w^k - w over interior
// points in [lo, hi].
double wave_ode_residual(const WaveProfile& profile, const BranchingLaw& law, double lo = -30.0,
                         double hi = 30.0);

struct TailFit {
  double constant = 0.0;
  double relative_variation = 0.0;  // (max - min) / constant of the ratio
  std::size_t points = 0;
  bool reliable = false;
};

// Log-space least-squares constant for (1 - w(x)) / (x e^{-sqrt2 x}).
TailFit tail_constant(const WaveProfile& profile, double x_lo = 6.0, double x_hi = 9.0);
TailFit tail_constant(std::span<const double> x, std::span<const double> one_minus_omega,
                      double x_lo, double x_hi);

struct LaplaceConstantSettings {
  Grid grid{-40.0, 160.0, 0.02, 0.01, Frame::comoving};
  double t1 = 100.0;
  double t2 = 400.0;
  int jobs = 1;
};

struct LaplaceConstant {
  std::string phi;
  std::optional<double> delta;
  double value = 0.0;        // at t2
  double value_early = 0.0;  // at t1
  double t1 = 0.0;
  double t2 = 0.0;
  double drift = 0.0;  // |value - value_early| / value
  // Two-point extrapolation assuming C(t) = C + a log t / sqrt t.
  double extrapolated = 0.0;
  bool converged = true;  // drift <= 5%
};

// sqrt(2/pi) int_0^inf v(t, y + sqrt2 t) y e^{sqrt2 y} dy on a co-moving field.
double tail_integral(const SolutionField& field);

LaplaceConstant laplace_constant(const TestFunction& phi, std::optional<double> delta,
                                 const LaplaceConstantSettings& settings = {},
                                 const BranchingLaw& law = BranchingLaw::binary());

// Bramson's bridge interpolation of v(t, X + sqrt2 t) from the co-moving field
// at time r. Throws std::invalid_argument for t <= r.
double psi_approx(const SolutionField& field_r, double r, double t, double X);
bool psi_valid(double r, double t, double X);

// Probability that a Brownian bridge of length t from A to B (both above a
// line) stays above it: 1 - exp(-2AB/t).
double bridge_below_line_prob(double A, double B, double t);

struct BridgeMonteCarlo {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t bridges = 0;
  std::size_t steps = 0;
};

// Skeleton simulation of the bridge with exact per-step crossing weights.
BridgeMonteCarlo bridge_monte_carlo(double A, double B, double t, std::size_t bridges,
                                    std::size_t steps, std::uint64_t seed);

// E exp(-C z e^{-sqrt2 x}) over the samples.
double gumbel_mixture_cdf(double x, double C, std::span<const double> z_samples);

struct TailAsymptotics {
  std::vector<double> times;
  std::vector<double> values;
  double limit_estimate = 0.0;
  double last_ratio = 1.0;  // values[n-1] / values[n-2]
  bool stabilized = false;  // |last_ratio - 1| < 1e-2
};

// e^{sqrt2 x} (t^{3/2} / log t) psi(r, t, x + sqrt2 t) along `times`.
TailAsymptotics front_tail_fixed_x(const SolutionField& field_r, double r,
                                   std::span<const double> times, double x);
// e^{sqrt2 x} (t^{3/2} / x) psi(r, t, x + Y + sqrt2 t) with x = a sqrt t.
TailAsymptotics front_tail_scaled(const SolutionField& field_r, double r,
                                  std::span<const double> times, double a, double Y);
// (3 / (2 sqrt pi)) int y e^{sqrt2 y} v(r, y + sqrt2 r) dy, the fixed-x limit.
double front_tail_fixed_x_limit(const SolutionField& field_r);

// Tabulate u(t, x + m(t)) on [x_lo, x_hi].
std::vector<std::pair<double, double>> max_law_table(const SolutionField& field, double x_lo,
                                                     double x_hi, double step);

void write_field_csv(std::ostream& out, const SolutionField& field, bool lab_coordinates = false);
std::string field_sidecar_json(const SolutionField& field, const std::string& ic,
                               const std::string& law);
void write_profile_csv(std::ostream& out, const WaveProfile& profile);

}  // namespace bbmlab
