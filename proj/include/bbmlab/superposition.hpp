#pragma once

// Superposition of independent BBMs started from several points, compared
// with a single BBM from the origin: gap processes should agree in law and
// maxima should agree after a scalar shift.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bbmlab/branching_law.hpp"
#include "bbmlab/pointproc.hpp"

namespace bbmlab {

struct SuperpositionConfig {
  std::vector<double> starts{0.0, 0.0};
  double t = 10.0;
  std::size_t replicas = 2000;
  std::optional<double> prune_gap = 8.0;
  // Points within this distance of the maximum count as front points.
  double front_depth = 4.0;
  std::uint64_t seed = 0;
  int jobs = 0;
};

struct SuperpositionReport {
  SuperpositionConfig config;
  // Superposed gap process against the single-BBM gap process.
  ProcessComparison gaps;
  // Scalar shift s minimizing the KS distance between the superposed maximum
  // and the single maximum + s, and that distance.
  double max_shift = 0.0;
  double shifted_max_ks = 0.0;
  // Per start: observed share of front points descending from it, and the
  // share e^{sqrt2 s_i} / sum_j e^{sqrt2 s_j} predicted by the derivative
  // martingale scaling.
  std::vector<double> front_share;
  std::vector<double> predicted_share;
  // Some start never reached the front while another supplied all of it.
  bool one_sided = false;
  std::optional<std::size_t> dominant_start;
};

SuperpositionReport superposition_check(const SuperpositionConfig& config,
                                        const BranchingLaw& law = BranchingLaw::binary());

std::string superposition_json(const SuperpositionReport& report);

}  // namespace bbmlab
