// Acceptance gate: runs every criterion, prints one PASS/FAIL line each and
// writes criterion_<id>.json plus summary.json into the output directory.
//
//   acceptance [--out DIR] [--only ID]... [--seed N] [--jobs N]

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <vector>

#include "CLI11.hpp"
#include "bbmlab/acceptance.hpp"
#include "bbmlab/experiments.hpp"
#include "bbmlab/manifest.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out = "acceptance_out";
  std::vector<int> only;
  std::uint64_t seed = 20240611;
  int jobs = 0;
  app.add_option("--out", out, "Directory for criterion reports");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, bbmlab::kCriterionCount));
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--jobs", jobs, "Worker threads, 0 for the OpenMP default");
  CLI11_PARSE(app, argc, argv);

  if (only.empty()) {
    for (int id = 1; id <= bbmlab::kCriterionCount; ++id) only.push_back(id);
  }
  std::filesystem::create_directories(out);
  bbmlab::AcceptanceSuite suite(seed, jobs);
  bool all = true;
  for (int id : only) {
    bbmlab::CriterionResult r;
    try {
      r = suite.run(id);
    } catch (const std::exception& e) {
      r.id = id;
      r.name = "criterion " + std::to_string(id);
      r.pass = false;
      r.note = std::string("error: ") + e.what();
    }
    all = all && r.pass;
    const auto j = bbmlab::criterion_json(r);
    bbmlab::atomic_write(std::filesystem::path(out) / ("criterion_" + std::to_string(id) + ".json"), j.dump(2) + "\n");
    std::printf("%s #%d %s (%.0f s) %s\n", r.pass ? "PASS" : "FAIL", id, r.name.c_str(), r.seconds,
                r.measured.dump().c_str());
    std::fflush(stdout);
  }
  const auto summary = bbmlab::aggregate_reports(out);
  bbmlab::atomic_write(std::filesystem::path(out) / "summary.json", summary.dump(2) + "\n");
  std::printf("%zu/%zu criteria pass\n", summary["passed"].get<std::size_t>(), summary["total"].get<std::size_t>());
  return all ? 0 : 1;
}
