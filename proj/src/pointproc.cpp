#include "bbmlab/pointproc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "bbmlab/error.hpp"
#include "bbmlab/parallel.hpp"

namespace bbmlab {

namespace {

double smoothstep(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * (3.0 - 2.0 * u);
}

const char* family_name(TestFunction::Family f) {
  switch (f) {
    case TestFunction::Family::box: return "box";
    case TestFunction::Family::tent: return "tent";
    case TestFunction::Family::bump: return "bump";
  }
  return "?";
}

}  // namespace

TestFunction::TestFunction(Family f, double lo, double hi, double height, double mollifier)
    : family_(f), lo_(lo), hi_(hi), height_(height), mollifier_(mollifier) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("test function: support must be a finite interval");
  }
  if (!(height >= 0.0)) throw std::invalid_argument("test function: height must be >= 0");
}

TestFunction TestFunction::box(double lo, double hi, double height, double mollifier) {
  if (!(mollifier > 0.0) || 2.0 * mollifier > hi - lo) {
    throw std::invalid_argument("box: mollifier width must be positive and fit twice in the support");
  }
  return TestFunction(Family::box, lo, hi, height, mollifier);
}

TestFunction TestFunction::tent(double lo, double hi, double height) {
  if (!(lo < hi)) throw std::invalid_argument("tent: empty support");
  return TestFunction(Family::tent, lo, hi, height, 0.0);
}

TestFunction TestFunction::bump(double lo, double hi, double height) {
  if (!(lo < hi)) throw std::invalid_argument("bump: empty support");
  return TestFunction(Family::bump, lo, hi, height, 0.0);
}

TestFunction TestFunction::zero() { return TestFunction(Family::tent, 0.0, 1.0, 0.0, 0.0); }

double TestFunction::operator()(double x) const {
  if (height_ == 0.0 || x <= lo_ || x >= hi_) return 0.0;
  switch (family_) {
    case Family::box:
      return height_ * smoothstep((x - lo_) / mollifier_) * smoothstep((hi_ - x) / mollifier_);
    case Family::tent: {
      const double mid = 0.5 * (lo_ + hi_);
      const double half = 0.5 * (hi_ - lo_);
      return height_ * (1.0 - std::fabs(x - mid) / half);
    }
    case Family::bump: {
      const double r = (x - 0.5 * (lo_ + hi_)) / (0.5 * (hi_ - lo_));
      return height_ * std::exp(1.0 - 1.0 / (1.0 - r * r));
    }
  }
  return 0.0;
}

TestFunction TestFunction::translated(double offset) const {
  return TestFunction(family_, lo_ + offset, hi_ + offset, height_, mollifier_);
}

std::string TestFunction::describe() const {
  std::ostringstream os;
  os << family_name(family_) << '[' << lo_ << ',' << hi_ << "]*" << height_;
  return os.str();
}

std::vector<TestFunction> default_panel() {
  return {TestFunction::box(-4.0, -2.0), TestFunction::box(-2.0, 0.0),
          TestFunction::tent(-3.0, -1.0), TestFunction::tent(-1.0, 1.0),
          TestFunction::bump(-1.0, 2.0)};
}

std::vector<TestFunction> default_gap_panel() {
  return {TestFunction::box(-4.0, -2.0), TestFunction::box(-2.0, -0.1),
          TestFunction::tent(-3.0, -1.0), TestFunction::tent(-1.5, 0.0),
          TestFunction::bump(-2.5, -0.5)};
}

double laplace_factor(const PointConfiguration& config, const TestFunction& phi) {
  const auto& pts = config.points();
  const auto first = std::upper_bound(pts.begin(), pts.end(), phi.lo());
  double sum = 0.0;
  for (auto it = first; it != pts.end() && *it < phi.hi(); ++it) sum += phi(*it);
  return std::exp(-sum);
}

namespace {

LaplaceEstimate summarize(const std::vector<double>& factors, const TestFunction& phi) {
  LaplaceEstimate est;
  est.phi = phi.describe();
  est.replicas = factors.size();
  if (factors.empty()) return est;
  double s = 0.0;
  for (double f : factors) s += f;
  const double n = static_cast<double>(factors.size());
  est.mean = s / n;
  if (factors.size() > 1) {
    double ss = 0.0;
    for (double f : factors) ss += (f - est.mean) * (f - est.mean);
    est.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return est;
}

}  // namespace

LaplaceEstimate laplace_functional(std::span<const PointConfiguration> configs,
                                   const TestFunction& phi) {
  std::vector<double> factors;
  factors.reserve(configs.size());
  for (const auto& c : configs) factors.push_back(laplace_factor(c, phi));
  return summarize(factors, phi);
}

std::vector<LaplaceEstimate> laplace_panel_serial(std::span<const PointConfiguration> configs,
                                                  std::span<const TestFunction> panel) {
  std::vector<LaplaceEstimate> out;
  for (const auto& phi : panel) out.push_back(laplace_functional(configs, phi));
  return out;
}

std::vector<LaplaceEstimate> laplace_panel(std::span<const PointConfiguration> configs,
                                           std::span<const TestFunction> panel, int jobs) {
  const std::size_t n = configs.size();
  const std::size_t m = panel.size();
  std::vector<double> factors(n * m);
  const int threads = effective_jobs(jobs);
  const auto total = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long long i = 0; i < total; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      factors[k * n + static_cast<std::size_t>(i)] =
          laplace_factor(configs[static_cast<std::size_t>(i)], panel[k]);
    }
  }
  std::vector<LaplaceEstimate> out;
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> column(factors.begin() + static_cast<long>(k * n),
                               factors.begin() + static_cast<long>((k + 1) * n));
    out.push_back(summarize(column, panel[k]));
  }
  return out;
}

PointConfiguration gap_process(const PointConfiguration& config) {
  if (config.empty()) throw EmptyPopulationError();
  std::vector<double> pts(config.points());
  const double top = pts.back();
  for (double& p : pts) p -= top;
  return PointConfiguration(std::move(pts), config.origin());
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> sample, std::size_t skipped)
    : sample_(std::move(sample)), skipped_(skipped) {
  std::sort(sample_.begin(), sample_.end());
}

double EmpiricalCdf::operator()(double x) const {
  if (sample_.empty()) return 0.0;
  const auto k = std::upper_bound(sample_.begin(), sample_.end(), x) - sample_.begin();
  return static_cast<double>(k) / static_cast<double>(sample_.size());
}

EmpiricalCdf empirical_max_cdf(std::span<const PointConfiguration> configs) {
  std::vector<double> maxima;
  std::size_t skipped = 0;
  for (const auto& c : configs) {
    if (c.empty()) {
      ++skipped;
    } else {
      maxima.push_back(c.max());
    }
  }
  return EmpiricalCdf(std::move(maxima), skipped);
}

double ks_distance(const EmpiricalCdf& empirical, const std::function<double(double)>& reference) {
  const auto& xs = empirical.sample();
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < xs.size()) {
    std::size_t j = i;
    while (j < xs.size() && xs[j] == xs[i]) ++j;
    const double f = reference(xs[i]);
    d = std::max({d, std::fabs(static_cast<double>(j) / n - f), std::fabs(f - static_cast<double>(i) / n)});
    i = j;
  }
  return d;
}

double ks_two_sample(const EmpiricalCdf& a, const EmpiricalCdf& b) {
  const auto& x = a.sample();
  const auto& y = b.sample();
  if (x.empty() || y.empty()) return x.empty() && y.empty() ? 0.0 : 1.0;
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() || j < y.size()) {
    double v;
    if (j >= y.size() || (i < x.size() && x[i] <= y[j])) {
      v = x[i];
    } else {
      v = y[j];
    }
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double kolmogorov_pvalue(double d, double n) {
  if (d <= 0.0) return 1.0;
  const double sn = std::sqrt(n);
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

DispersionResult poisson_dispersion(std::span<const std::uint64_t> counts) {
  if (counts.size() < 30) throw std::invalid_argument("poisson_dispersion: need at least 30 counts");
  DispersionResult r;
  r.samples = counts.size();
  const double n = static_cast<double>(counts.size());
  double s = 0.0;
  for (auto c : counts) s += static_cast<double>(c);
  r.mean = s / n;
  double ss = 0.0;
  for (auto c : counts) ss += (static_cast<double>(c) - r.mean) * (static_cast<double>(c) - r.mean);
  r.variance = ss / (n - 1.0);
  if (r.mean == 0.0) return r;
  r.index = r.variance / r.mean;
  const double statistic = ss / r.mean;
  const double half_df = 0.5 * (n - 1.0);
  r.p_over = boost::math::gamma_q(half_df, 0.5 * statistic);
  r.p_under = boost::math::gamma_p(half_df, 0.5 * statistic);
  return r;
}

ProcessComparison compare_processes(std::span<const PointConfiguration> a,
                                    std::span<const PointConfiguration> b,
                                    std::span<const TestFunction> panel, double ks_threshold) {
  if (a.empty() || b.empty()) throw std::invalid_argument("compare_processes: empty sample");
  ProcessComparison out;
  out.ks_threshold = ks_threshold;
  const auto ea = laplace_panel(a, panel);
  const auto eb = laplace_panel(b, panel);
  bool all = true;
  for (std::size_t k = 0; k < panel.size(); ++k) {
    PanelComparison pc{ea[k], eb[k], false};
    pc.overlap = ea[k].ci_lo() <= eb[k].ci_hi() && eb[k].ci_lo() <= ea[k].ci_hi();
    all = all && pc.overlap;
    out.panel.push_back(pc);
  }
  out.max_ks = ks_two_sample(empirical_max_cdf(a), empirical_max_cdf(b));
  out.pass = all && out.max_ks < ks_threshold;
  return out;
}

double sample_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("sample_correlation: need two equal-length samples");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace bbmlab
