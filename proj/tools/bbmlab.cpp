// Command-line front end for the experiment commands.
//
//   bbmlab <command> [--config FILE] [--seed N] [--replicas N] [--out DIR]
//                    [--jobs N] [--format csv|json] [--set key=value]...
//
// Exit status: 0 ok, 1 a checked criterion failed, 2 execution error (with a
// JSON error object on stderr).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bbmlab/config.hpp"
#include "bbmlab/experiments.hpp"

namespace {

using bbmlab::Json;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replicas;
  std::string out;
  int jobs = 0;
  std::string format = "csv";
  std::vector<std::string> sets;
  bool print_config = false;
  std::string manifest;
  std::string dir;
};

int fail(const std::string& kind, const std::string& message) {
  Json err = {{"error", kind}, {"message", message}};
  std::cerr << err.dump() << '\n';
  return bbmlab::kExitError;
}

Json load_config(const std::string& command, const Flags& f) {
  Json user = Json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw bbmlab::ConfigError("cannot open config " + f.config);
    try {
      user = Json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& ex) {
      throw bbmlab::ConfigError("config " + f.config + ": " + ex.what());
    }
  }
  Json config = bbmlab::merge_config(command, user);
  const Json defaults = bbmlab::default_config(command);
  auto set_flag = [&](const char* key, const std::string& text) {
    if (!defaults.contains(key)) throw bbmlab::ConfigError(std::string("--") + key + " does not apply to " + command);
    bbmlab::override_key(command, config, key, text);
  };
  if (f.seed) set_flag("seed", std::to_string(*f.seed));
  if (f.replicas) set_flag("replicas", std::to_string(*f.replicas));
  if (!f.manifest.empty()) set_flag("manifest", Json(f.manifest).dump());
  if (!f.dir.empty()) set_flag("dir", Json(f.dir).dump());
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw bbmlab::ConfigError("--set expects key=value, got " + s);
    bbmlab::override_key(command, config, s.substr(0, eq), s.substr(eq + 1));
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branching Brownian motion extremal-process laboratory"};
  app.require_subcommand(1);
  Flags flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : bbmlab::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", flags.config, "JSON configuration file");
    sub->add_option("--seed", flags.seed, "Master seed");
    sub->add_option("--replicas", flags.replicas, "Replica or sample count");
    sub->add_option("--out", flags.out, "Output directory (default $BBMLAB_OUT or ./bbmlab_out)");
    sub->add_option("--jobs", flags.jobs, "Worker threads, 0 for the OpenMP default");
    sub->add_option("--format", flags.format, "Tabular output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--set", flags.sets, "Override a configuration key (dotted path)");
    sub->add_flag("--print-config", flags.print_config, "Print the effective configuration and exit");
    if (name == "verify-manifest") sub->add_option("manifest", flags.manifest, "Manifest file");
    if (name == "report") sub->add_option("dir", flags.dir, "Directory with criterion reports");
    subs[name] = sub;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return fail("usage", e.what());
  }

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }
  try {
    const Json config = load_config(command, flags);
    if (flags.print_config) {
      std::cout << config.dump(2) << '\n';
      return bbmlab::kExitOk;
    }
    bbmlab::RunOptions options;
    if (!flags.out.empty()) {
      options.out = flags.out;
    } else if (const char* env = std::getenv("BBMLAB_OUT"); env && *env) {
      options.out = std::filesystem::path(env) / command;
    } else {
      options.out = std::filesystem::path("bbmlab_out") / command;
    }
    options.jobs = flags.jobs;
    options.format = flags.format == "json" ? bbmlab::Format::json : bbmlab::Format::csv;
    const auto outcome = bbmlab::run_command(command, config, options);
    std::cout << outcome.summary.dump(2) << '\n';
    return outcome.exit_code;
  } catch (const bbmlab::ConfigError& e) {
    return fail("config", e.what());
  } catch (const std::exception& e) {
    return fail("execution", e.what());
  }
}
