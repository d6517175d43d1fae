#include <stdexcept>

#include "bbmlab/branching_law.hpp"
#include "doctest.h"

using bbmlab::BranchingLaw;

TEST_CASE("binary law") {
  const auto law = BranchingLaw::binary();
  CHECK(law.is_binary());
  CHECK(law.mean() == 2.0);
  CHECK(law.second_factorial_moment() == 2.0);
  CHECK(law.sample(0.3) == 2);
  CHECK(law.generating(0.5) == doctest::Approx(0.25));
}

TEST_CASE("mixed law samples by inversion") {
  const BranchingLaw law({{1, 0.25}, {2, 0.5}, {3, 0.25}});
  CHECK_FALSE(law.is_binary());
  CHECK(law.second_factorial_moment() == doctest::Approx(2.5));
  CHECK(law.sample(0.1) == 1);
  CHECK(law.sample(0.5) == 2);
  CHECK(law.sample(0.9) == 3);
  CHECK(law.generating_derivative(1.0) == doctest::Approx(2.0));
}

TEST_CASE("invalid laws are rejected") {
  CHECK_THROWS_AS(BranchingLaw({{1, 0.5}, {2, 0.4}}), std::invalid_argument);
  CHECK_THROWS_AS(BranchingLaw({{1, 0.5}, {2, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(BranchingLaw({{0, 0.5}, {4, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(BranchingLaw({{2, 1.1}, {3, -0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(BranchingLaw(std::map<int, double>{}), std::invalid_argument);
}

TEST_CASE("degenerate law never branches") {
  const auto law = BranchingLaw::degenerate();
  CHECK(law.is_degenerate());
  CHECK(law.sample(0.999) == 1);
  CHECK(law.mean() == 1.0);
}
