#pragma once

// Acceptance criteria at desk scale. Each criterion returns its measured
// values alongside the pass flag; expensive shared inputs (the t=10 extremal
// sample, the wave profile, Z draws) are computed once per suite.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bbmlab/config.hpp"
#include "bbmlab/fkpp.hpp"
#include "bbmlab/martingales.hpp"
#include "bbmlab/point_configuration.hpp"

namespace bbmlab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  Json measured = Json::object();
  std::string note;
  double seconds = 0.0;
};

Json criterion_json(const CriterionResult& r);

inline constexpr int kCriterionCount = 10;

class AcceptanceSuite {
 public:
  explicit AcceptanceSuite(std::uint64_t seed = 20240611, int jobs = 0);

  // id in [1, kCriterionCount].
  CriterionResult run(int id);

 private:
  CriterionResult mckean();
  CriterionResult traveling_wave();
  CriterionResult tail_constant_stability();
  CriterionResult lalley_sellke();
  CriterionResult limit_process_match();
  CriterionResult extrema_poissonianity();
  CriterionResult overshoot();
  CriterionResult atom_window();
  CriterionResult psi_sandwich();
  CriterionResult infrastructure();

  std::uint64_t seed_for(int id, std::uint64_t sub = 0) const;
  const std::vector<PointConfiguration>& extremal10();
  const SolutionField& field10();
  // Heaviside fields at t = 50, 100, 400 on [-40, 160].
  const std::vector<SolutionField>& wave_fields();
  const WaveProfile& omega();
  double fitted_C();
  const ZEmpirical& z10();

  std::uint64_t seed_;
  int jobs_;
  std::optional<std::vector<PointConfiguration>> extremal10_;
  std::optional<SolutionField> field10_;
  std::optional<std::vector<SolutionField>> wave_fields_;
  std::optional<WaveProfile> omega_;
  std::optional<ZEmpirical> z10_;
};

}  // namespace bbmlab
