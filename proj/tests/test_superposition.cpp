#include <cmath>

#include "bbmlab/superposition.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bbmlab;

TEST_CASE("superposition of two BBMs from the origin keeps the gap law") {
  SuperpositionConfig cfg;
  cfg.starts = {0.0, 0.0};
  cfg.replicas = 600;
  cfg.seed = 5;
  const auto r = superposition_check(cfg);
  for (const auto& p : r.gaps.panel) CHECK(p.overlap);
  CHECK_FALSE(r.one_sided);
  CHECK(r.predicted_share[0] == doctest::Approx(0.5));
  CHECK(std::fabs(r.front_share[0] - 0.5) < 0.1);
  // Two copies push the maximum forward.
  CHECK(r.max_shift > 0.0);
  const auto j = nlohmann::json::parse(superposition_json(r));
  CHECK(j["gap_panel"].size() == 5);
}

TEST_CASE("a far-behind start never reaches the front") {
  SuperpositionConfig cfg;
  cfg.starts = {0.0, -50.0};
  cfg.replicas = 200;
  cfg.seed = 6;
  const auto r = superposition_check(cfg);
  CHECK(r.one_sided);
  REQUIRE(r.dominant_start);
  CHECK(*r.dominant_start == 0);
  CHECK(r.front_share[1] == 0.0);
  CHECK(r.predicted_share[1] < 1e-30);
}

TEST_CASE("single start matches the single BBM in law") {
  SuperpositionConfig cfg;
  cfg.starts = {0.0};
  cfg.replicas = 600;
  cfg.seed = 7;
  const auto r = superposition_check(cfg);
  CHECK(r.front_share == std::vector<double>{1.0});
  CHECK(std::fabs(r.max_shift) < 0.3);
  CHECK(r.shifted_max_ks < 0.08);
  CHECK_THROWS_AS(superposition_check(SuperpositionConfig{.starts = {}}), std::invalid_argument);
}
