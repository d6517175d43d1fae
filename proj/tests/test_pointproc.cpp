#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "bbmlab/error.hpp"
#include "bbmlab/pointproc.hpp"
#include "doctest.h"

using namespace bbmlab;

TEST_CASE("point configuration sorts and counts half-open intervals") {
  PointConfiguration c({3.0, -2.0, 0.0, 1.0});
  CHECK(c.points() == std::vector<double>{-2.0, 0.0, 1.0, 3.0});
  CHECK(c.max() == 3.0);
  CHECK(c.count_in(0.0, 1.0) == 1);
  CHECK(c.count_in(-2.0, 3.0) == 3);
  CHECK_THROWS_AS(PointConfiguration({std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(PointConfiguration().max(), EmptyPopulationError);
}

TEST_CASE("test functions are continuous, nonnegative and compactly supported") {
  const auto box = TestFunction::box(-1.0, 1.0);
  CHECK(box(-1.0) == 0.0);
  CHECK(box(0.0) == 1.0);
  CHECK(box(-1.0 + 0.025) == doctest::Approx(0.5));
  const auto tent = TestFunction::tent(-1.0, 1.0, 2.0);
  CHECK(tent(0.0) == 2.0);
  CHECK(tent(0.5) == 1.0);
  const auto bump = TestFunction::bump(-1.0, 1.0);
  CHECK(bump(0.0) == 1.0);
  CHECK(bump(0.999) < 1e-100);
  CHECK(TestFunction::zero()(0.5) == 0.0);
  CHECK(tent.translated(1.0)(1.0) == 2.0);
  CHECK_THROWS(TestFunction::box(0.0, 0.05));
}

TEST_CASE("laplace functional trivial values") {
  std::vector<PointConfiguration> configs{PointConfiguration({0.0, 1.0}), PointConfiguration({-3.0})};
  const auto zero = laplace_functional(configs, TestFunction::zero());
  CHECK(zero.mean == 1.0);
  CHECK(zero.std_error == 0.0);

  std::vector<PointConfiguration> empty(5);
  CHECK(laplace_functional(empty, TestFunction::box(-1, 1)).mean == 1.0);

  std::vector<PointConfiguration> single{PointConfiguration({0.0})};
  CHECK(laplace_functional(single, TestFunction::bump(-1, 1)).mean == doctest::Approx(0.367879441).epsilon(1e-9));
}

TEST_CASE("laplace functional ordering and translation equivariance") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd(0.0, 1.5);
  std::vector<PointConfiguration> configs, shifted;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> pts;
    for (int k = 0; k < 6; ++k) pts.push_back(nd(gen));
    configs.emplace_back(pts);
    shifted.push_back(configs.back().shifted(0.75));
  }
  const auto small = TestFunction::tent(-1.0, 1.0, 1.0);
  const auto large = TestFunction::tent(-1.0, 1.0, 2.0);
  for (const auto& c : configs) CHECK(laplace_factor(c, small) >= laplace_factor(c, large));
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto phi = TestFunction::bump(-1.0, 1.5);
    CHECK(laplace_factor(shifted[i], phi.translated(0.75)) ==
          doctest::Approx(laplace_factor(configs[i], phi)).epsilon(1e-12));
  }
  const auto panel = default_panel();
  const auto par = laplace_panel(configs, panel, 4);
  const auto ser = laplace_panel_serial(configs, panel);
  for (std::size_t k = 0; k < panel.size(); ++k) {
    CHECK(par[k].mean == ser[k].mean);
    CHECK(par[k].std_error == ser[k].std_error);
    CHECK(par[k].mean > 0.0);
    CHECK(par[k].mean <= 1.0);
  }
}

TEST_CASE("gap process") {
  const auto g = gap_process(PointConfiguration({-2.0, 0.0, 3.0}));
  CHECK(g.points() == std::vector<double>{-5.0, -3.0, 0.0});
  CHECK(gap_process(PointConfiguration({4.2})).points() == std::vector<double>{0.0});
  CHECK(gap_process(g) == g);
  CHECK_THROWS_AS(gap_process(PointConfiguration()), EmptyPopulationError);
}

TEST_CASE("empirical max cdf") {
  std::vector<PointConfiguration> one{PointConfiguration({-1.0, 2.0})};
  const auto f = empirical_max_cdf(one);
  CHECK(f(1.999) == 0.0);
  CHECK(f(2.0) == 1.0);

  std::vector<PointConfiguration> two{PointConfiguration({0.0}), PointConfiguration({1.0}), PointConfiguration()};
  const auto g = empirical_max_cdf(two);
  CHECK(g(0.5) == 0.5);
  CHECK(g.skipped() == 1);
  CHECK(g(-10.0) == 0.0);
  CHECK(g(10.0) == 1.0);
}

TEST_CASE("ks distance") {
  const EmpiricalCdf at_zero({0.0});
  auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  CHECK(ks_distance(at_zero, uniform) == 1.0);

  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  std::vector<double> xs(10000);
  for (auto& x : xs) x = nd(gen);
  const EmpiricalCdf emp(xs);
  const double d = ks_distance(emp, [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); });
  CHECK(d < 0.02);
  CHECK(kolmogorov_pvalue(d, 1e4) > 0.01);
  CHECK(ks_two_sample(emp, emp) == 0.0);
}

TEST_CASE("kolmogorov p-value against tabulated quantiles") {
  // Asymptotic critical values: P[sqrt(n) D > 1.358] = 0.05, > 1.628 = 0.01.
  CHECK(kolmogorov_pvalue(1.358 / 100.0, 1e4) == doctest::Approx(0.05).epsilon(0.03));
  CHECK(kolmogorov_pvalue(1.628 / 100.0, 1e4) == doctest::Approx(0.01).epsilon(0.03));
  CHECK(kolmogorov_pvalue(0.0, 10) == 1.0);
}

TEST_CASE("poisson dispersion") {
  std::vector<std::uint64_t> constant(100, 3);
  const auto c = poisson_dispersion(constant);
  REQUIRE(c.index);
  CHECK(*c.index == 0.0);

  std::mt19937_64 gen(5);
  std::poisson_distribution<std::uint64_t> pois(5.0);
  std::vector<std::uint64_t> p(10000);
  for (auto& v : p) v = pois(gen);
  const auto r = poisson_dispersion(p);
  CHECK(*r.index > 0.95);
  CHECK(*r.index < 1.05);

  std::geometric_distribution<std::uint64_t> geo(0.2);
  for (auto& v : p) v = geo(gen);
  const auto g = poisson_dispersion(p);
  CHECK(*g.index > 1.5);
  CHECK(g.p_over < 0.01);

  std::vector<std::uint64_t> zeros(40, 0);
  CHECK_FALSE(poisson_dispersion(zeros).index.has_value());
  std::vector<std::uint64_t> few(10, 1);
  CHECK_THROWS_AS(poisson_dispersion(few), std::invalid_argument);
}

TEST_CASE("compare processes detects a translation") {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> nd(-1.0, 1.0);
  std::vector<PointConfiguration> a, b;
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> pts;
    for (int k = 0; k < 4; ++k) pts.push_back(nd(gen));
    a.emplace_back(pts);
    b.push_back(a.back().shifted(1.0));
  }
  const auto panel = default_panel();
  const auto same = compare_processes(a, a, panel);
  CHECK(same.pass);
  CHECK(same.max_ks == 0.0);
  const auto moved = compare_processes(a, b, panel);
  CHECK_FALSE(moved.pass);
  CHECK(moved.max_ks > 0.3);
}

TEST_CASE("sample correlation") {
  std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1};
  CHECK(sample_correlation(x, y) == doctest::Approx(1.0));
  CHECK(sample_correlation(x, z) == doctest::Approx(-1.0));
}
