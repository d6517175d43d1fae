#pragma once

// Experiment commands behind the CLI. Every command validates its
// configuration, writes its artifacts atomically into the output directory
// and finishes with a manifest.json listing them with checksums.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bbmlab/branching_law.hpp"
#include "bbmlab/config.hpp"
#include "bbmlab/fkpp.hpp"
#include "bbmlab/point_configuration.hpp"

namespace bbmlab {

enum class Format { csv, json };

struct RunOptions {
  std::filesystem::path out = ".";
  int jobs = 0;
  Format format = Format::csv;
};

// Exit codes: 0 ok, 1 a checked criterion failed, 2 execution error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCriterionFailed = 1;
inline constexpr int kExitError = 2;

struct CommandOutcome {
  int exit_code = kExitOk;
  Json summary = Json::object();
};

// `config` must already be merged with the defaults.
CommandOutcome run_command(const std::string& command, const Json& config, const RunOptions& options);

// Offspring law from {"k": p_k, ...}.
BranchingLaw law_from_json(const Json& offspring);

// Positions minus m(t) for each replica of a BBM from the origin.
std::vector<PointConfiguration> sample_extremal(double t, std::size_t replicas, std::uint64_t seed,
                                                std::optional<double> prune_gap, int jobs,
                                                const BranchingLaw& law = BranchingLaw::binary());

// Heaviside solve; fields at the requested times in the given convention.
std::vector<SolutionField> heaviside_fields(const Grid& grid, std::vector<double> times,
                                            Convention convention = Convention::u,
                                            const BranchingLaw& law = BranchingLaw::binary(),
                                            int jobs = 1);

// Summary JSON of every criterion_*.json found in `dir`, sorted by id.
Json aggregate_reports(const std::filesystem::path& dir);

}  // namespace bbmlab
