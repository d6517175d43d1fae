#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bbmlab/config.hpp"
#include "bbmlab/experiments.hpp"
#include "bbmlab/manifest.hpp"
#include "doctest.h"

using namespace bbmlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("bbmlab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("sha256 known digests") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config merge rejects unknown keys and wrong types") {
  for (const auto& name : command_names()) CHECK_NOTHROW(default_config(name));
  CHECK_THROWS_AS(default_config("no-such-command"), ConfigError);
  CHECK_THROWS_AS(merge_config("simulate-bbm", Json{{"replica", 3}}), ConfigError);
  CHECK_THROWS_AS(merge_config("simulate-bbm", Json{{"t", "ten"}}), ConfigError);
  CHECK_THROWS_AS(merge_config("simulate-bbm", Json{{"replicas", -1}}), ConfigError);
  const auto c = merge_config("simulate-bbm", Json{{"t", 3.0}, {"prune_gap", 6.0}});
  CHECK(c["t"] == 3.0);
  CHECK(c["prune_gap"] == 6.0);
  CHECK(c["replicas"] == default_config("simulate-bbm")["replicas"]);

  auto d = default_config("max-law");
  override_key("max-law", d, "t", "12");
  CHECK(d["t"] == 12.0);
  CHECK_THROWS_AS(override_key("max-law", d, "nope", "1"), ConfigError);
  CHECK_THROWS_AS(override_key("max-law", d, "t", "x"), ConfigError);
}

TEST_CASE("config hash ignores key order") {
  const Json a = Json::parse(R"({"x": 1, "y": [1, 2]})");
  const Json b = Json::parse(R"({"y": [1, 2], "x": 1})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(Json::parse(R"({"x": 2, "y": [1, 2]})")));
}

TEST_CASE("simulate-bbm writes a verifiable, reproducible manifest") {
  const auto dir = scratch("sim");
  const auto config = merge_config("simulate-bbm", Json{{"replicas", 5}, {"t", 3.0}, {"seed", 4}});
  RunOptions o;
  o.out = dir / "a";
  const auto first = run_command("simulate-bbm", config, o);
  CHECK(first.exit_code == kExitOk);
  CHECK(verify_manifest(o.out / "manifest.json").ok);

  RunOptions again = o;
  again.out = dir / "b";
  again.jobs = 3;
  run_command("simulate-bbm", config, again);
  CHECK(slurp(o.out / "maxima.csv") == slurp(again.out / "maxima.csv"));
  CHECK(slurp(o.out / "snapshots.csv") == slurp(again.out / "snapshots.csv"));

  // A single flipped byte is caught.
  auto bytes = slurp(o.out / "maxima.csv");
  bytes[bytes.size() / 2] ^= 1;
  std::ofstream(o.out / "maxima.csv", std::ios::binary) << bytes;
  const auto check = verify_manifest(o.out / "manifest.json");
  CHECK_FALSE(check.ok);
  REQUIRE(check.mismatched.size() == 1);
  CHECK(check.mismatched[0] == "maxima.csv");
  fs::remove(o.out / "snapshots.csv");
  CHECK(verify_manifest(o.out / "manifest.json").missing.size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("zero replicas produce header-only tables") {
  const auto dir = scratch("zero");
  RunOptions o;
  o.out = dir;
  const auto r = run_command("simulate-bbm", merge_config("simulate-bbm", Json{{"replicas", 0}}), o);
  CHECK(r.exit_code == kExitOk);
  std::ifstream in(dir / "maxima.csv");
  std::string header, extra;
  std::getline(in, header);
  CHECK(header == "replica,max,max_minus_m");
  CHECK_FALSE(std::getline(in, extra));
  fs::remove_all(dir);
}

TEST_CASE("json format and report aggregation") {
  const auto dir = scratch("report");
  fs::create_directories(dir / "crit");
  std::ofstream(dir / "crit" / "criterion_2.json") << R"({"id": 2, "name": "two", "pass": false})";
  std::ofstream(dir / "crit" / "criterion_1.json") << R"({"id": 1, "name": "one", "pass": true})";
  const auto s = aggregate_reports(dir / "crit");
  CHECK(s["total"] == 2);
  CHECK(s["passed"] == 1);
  CHECK(s["all_pass"] == false);
  CHECK(s["criteria"][0]["id"] == 1);

  RunOptions o;
  o.out = dir / "out";
  const auto r = run_command("report", merge_config("report", Json{{"dir", (dir / "crit").string()}}), o);
  CHECK(r.exit_code == kExitCriterionFailed);
  CHECK(fs::exists(dir / "out" / "summary.json"));

  RunOptions j;
  j.out = dir / "json";
  j.format = Format::json;
  run_command("simulate-bbm", merge_config("simulate-bbm", Json{{"replicas", 2}, {"t", 1.0}}), j);
  CHECK(fs::exists(dir / "json" / "maxima.json"));
  fs::remove_all(dir);
}

TEST_CASE("offspring law from json") {
  const auto law = law_from_json(Json{{"1", 0.25}, {"3", 0.25}, {"2", 0.5}});
  CHECK(law.mean() == doctest::Approx(2.0));
  CHECK(law.probabilities().at(3) == 0.25);
  CHECK_THROWS_AS(law_from_json(Json{{"two", 1.0}}), ConfigError);
}
