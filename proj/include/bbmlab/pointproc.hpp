#pragma once

// Point-process statistics: Laplace functionals, gap processes, max laws,
// Kolmogorov-Smirnov distances and Poisson dispersion.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bbmlab/point_configuration.hpp"

namespace bbmlab {

class TestFunction {
 public:
  enum class Family { box, tent, bump };

  static constexpr double kDefaultMollifier = 0.05;

  // Box with smoothstep ramps of width `mollifier` inside [lo, hi].
  static TestFunction box(double lo, double hi, double height = 1.0,
                          double mollifier = kDefaultMollifier);
  static TestFunction tent(double lo, double hi, double height = 1.0);
  // exp(1 - 1/(1 - r^2)) profile; peak value `height` at the midpoint.
  static TestFunction bump(double lo, double hi, double height = 1.0);
  // phi == 0 everywhere.
  static TestFunction zero();

  double operator()(double x) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double height() const { return height_; }
  Family family() const { return family_; }
  // x -> phi(x - offset).
  TestFunction translated(double offset) const;
  std::string describe() const;

 private:
  TestFunction(Family f, double lo, double hi, double height, double mollifier);
  Family family_;
  double lo_;
  double hi_;
  double height_;
  double mollifier_;
};

// Two boxes, two tents and one bump spanning [-4, 2].
std::vector<TestFunction> default_panel();
// Panel for gap processes (points <= 0).
std::vector<TestFunction> default_gap_panel();

struct LaplaceEstimate {
  double mean = 1.0;
  double std_error = 0.0;
  std::size_t replicas = 0;
  std::string phi;

  double ci_lo() const { return mean - 1.96 * std_error; }
  double ci_hi() const { return mean + 1.96 * std_error; }
};

// exp(-sum phi(p)) for one configuration; empty configurations give 1.
double laplace_factor(const PointConfiguration& config, const TestFunction& phi);

LaplaceEstimate laplace_functional(std::span<const PointConfiguration> configs,
                                   const TestFunction& phi);

// Estimates for a whole panel. The OpenMP kernel and its serial reference
// return identical values (per-config factors are reduced in index order).
std::vector<LaplaceEstimate> laplace_panel(std::span<const PointConfiguration> configs,
                                           std::span<const TestFunction> panel, int jobs = 0);
std::vector<LaplaceEstimate> laplace_panel_serial(std::span<const PointConfiguration> configs,
                                                  std::span<const TestFunction> panel);

// Throws EmptyPopulationError on an empty configuration.
PointConfiguration gap_process(const PointConfiguration& config);

class EmpiricalCdf {
 public:
  EmpiricalCdf() = default;
  explicit EmpiricalCdf(std::vector<double> sample, std::size_t skipped = 0);

  double operator()(double x) const;
  const std::vector<double>& sample() const { return sample_; }
  std::size_t size() const { return sample_.size(); }
  std::size_t skipped() const { return skipped_; }

 private:
  std::vector<double> sample_;
  std::size_t skipped_ = 0;
};

// Empty configurations are skipped and counted.
EmpiricalCdf empirical_max_cdf(std::span<const PointConfiguration> configs);

// sup |F_emp - F_ref| over the jumps of F_emp (both one-sided limits).
double ks_distance(const EmpiricalCdf& empirical, const std::function<double(double)>& reference);
double ks_two_sample(const EmpiricalCdf& a, const EmpiricalCdf& b);
// P[D_n > d] under the null, asymptotic Kolmogorov law with the
// Stephens small-sample correction; n is the (effective) sample size.
double kolmogorov_pvalue(double d, double n);

struct DispersionResult {
  std::optional<double> index;  // empty when every count is zero
  double p_over = 1.0;          // P[chi2 >= statistic]
  double p_under = 1.0;         // P[chi2 <= statistic]
  double mean = 0.0;
  double variance = 0.0;
  std::size_t samples = 0;
};

// Variance-to-mean ratio and chi-square dispersion test; needs >= 30 counts.
DispersionResult poisson_dispersion(std::span<const std::uint64_t> counts);

struct PanelComparison {
  LaplaceEstimate a;
  LaplaceEstimate b;
  bool overlap = false;
};

struct ProcessComparison {
  std::vector<PanelComparison> panel;
  double max_ks = 0.0;
  double ks_threshold = 0.05;
  bool pass = false;
};

ProcessComparison compare_processes(std::span<const PointConfiguration> a,
                                    std::span<const PointConfiguration> b,
                                    std::span<const TestFunction> panel, double ks_threshold = 0.05);

double sample_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace bbmlab
