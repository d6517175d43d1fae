#include "bbmlab/config.hpp"

#include <map>

#include "bbmlab/manifest.hpp"

namespace bbmlab {

namespace {

const std::map<std::string, Json>& defaults() {
  static const std::map<std::string, Json> table = [] {
    std::map<std::string, Json> t;
    const Json binary = {{"2", 1.0}};
    t["simulate-bbm"] = {{"seed", 0},        {"replicas", 100},   {"t", 10.0},
                         {"drift", 0.0},     {"starts", {0.0}},   {"prune_gap", nullptr},
                         {"checkpoints", Json::array()},          {"offspring", binary},
                         {"record_genealogy", false},             {"population_cap", 10000000}};
    t["solve-fkpp"] = {{"ic", "heaviside"}, {"t", 400.0},       {"earlier", 200.0},
                       {"x_min", -40.0},    {"x_max", 160.0},   {"dx", 0.02},
                       {"dt", 0.01},        {"frame", "comoving"}, {"centering", "by_m"},
                       {"offspring", binary}, {"residual_tolerance", 1e-3}};
    t["sample-z"] = {{"seed", 0},           {"replicas", 1000},  {"horizon", 10.0},
                     {"prune_gap", nullptr}, {"paired_horizon", nullptr}, {"offspring", binary}};
    t["sample-aux"] = {{"seed", 0},         {"replicas", 100},   {"t", 10.0},
                       {"z", 1.0},          {"window_lo", nullptr}, {"window_hi", nullptr},
                       {"mode", "full"},    {"level", 0.0},      {"prune_gap", 8.0},
                       {"offspring", binary}};
    t["sample-cluster"] = {{"seed", 0},     {"replicas", 2000},  {"t", 16.0},
                           {"a", 0.7},      {"b", 0.0},          {"budget", 100000000},
                           {"gap_depth", 6.0}, {"epsilon", 1e-7}, {"offspring", binary}};
    t["compare-laplace"] = {{"a", ""}, {"b", ""}, {"panel", "default"}, {"ks_threshold", 0.05}};
    t["max-law"] = {{"seed", 0},            {"replicas", 10000}, {"t", 10.0},
                    {"prune_gap", 8.0},     {"ks_tolerance", 0.03}, {"x_min", -40.0},
                    {"x_max", 40.0},        {"dx", 0.02},        {"dt", 0.01},
                    {"offspring", binary}};
    t["genealogy-diagnostic"] = {{"seed", 0},     {"replicas", 200}, {"t", 10.0},
                                 {"alpha", 0.25}, {"r_d", 1.0},      {"r_g", 1.0},
                                 {"d_lo", -2.0},  {"d_hi", 0.0},     {"checkpoint_step", 0.5},
                                 {"top", 10},     {"prune_gap", 8.0}, {"offspring", binary}};
    t["atom-window"] = {{"seed", 0},          {"replicas", 20000}, {"t", 16.0},
                        {"y", 0.0},           {"z", 1.0},          {"c1", 0.3},
                        {"c2", 3.5},          {"window_c", 6.0},   {"bin_width", 0.1},
                        {"min_atoms", 100},   {"offspring", binary}};
    t["superposition"] = {{"seed", 0},        {"replicas", 2000}, {"t", 10.0},
                          {"starts", {0.0, 0.0}}, {"prune_gap", 8.0}, {"front_depth", 4.0},
                          {"offspring", binary}};
    t["report"] = {{"dir", ""}};
    t["verify-manifest"] = {{"manifest", ""}};
    return t;
  }();
  return table;
}

bool is_number(const Json& v) { return v.is_number(); }

void check(const Json& def, const Json& user, const std::string& path, Json& out) {
  if (def.is_null()) {
    if (!user.is_null() && !is_number(user)) throw ConfigError(path + ": expected a number or null");
    out = user;
    return;
  }
  if (def.is_object()) {
    if (!user.is_object()) throw ConfigError(path + ": expected an object");
    // Free-form maps (offspring law) keep their own keys.
    if (path.ends_with("offspring")) {
      for (const auto& [k, v] : user.items()) {
        if (!is_number(v)) throw ConfigError(path + "." + k + ": expected a number");
      }
      out = user;
      return;
    }
    for (const auto& [k, v] : user.items()) {
      if (!def.contains(k)) throw ConfigError("unknown key " + (path.empty() ? k : path + "." + k));
      check(def[k], v, path.empty() ? k : path + "." + k, out[k]);
    }
    return;
  }
  if (def.is_array()) {
    if (!user.is_array()) throw ConfigError(path + ": expected an array");
    for (const auto& v : user) {
      if (!is_number(v)) throw ConfigError(path + ": expected an array of numbers");
    }
    out = user;
    return;
  }
  if (def.is_number_unsigned() || def.is_number_integer()) {
    if (!user.is_number_integer() && !user.is_number_unsigned()) {
      throw ConfigError(path + ": expected an integer");
    }
    if (user.get<long long>() < 0) throw ConfigError(path + ": expected a nonnegative integer");
    out = user;
    return;
  }
  if (def.is_number() && !is_number(user)) throw ConfigError(path + ": expected a number");
  if (def.is_string() && !user.is_string()) throw ConfigError(path + ": expected a string");
  if (def.is_boolean() && !user.is_boolean()) throw ConfigError(path + ": expected a boolean");
  out = user;
}

}  // namespace

std::vector<std::string> command_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : defaults()) names.push_back(k);
  return names;
}

Json default_config(const std::string& command) {
  const auto it = defaults().find(command);
  if (it == defaults().end()) throw ConfigError("unknown command " + command);
  return it->second;
}

Json merge_config(const std::string& command, const Json& user) {
  Json out = default_config(command);
  if (user.is_null()) return out;
  check(out, user, "", out);
  return out;
}

void override_key(const std::string& command, Json& config, const std::string& dotted,
                  const std::string& text) {
  const Json def = default_config(command);
  Json parsed;
  try {
    parsed = Json::parse(text);
  } catch (const nlohmann::json::exception&) {
    parsed = text;  // bare strings need no quotes
  }
  Json patch = Json::object();
  Json* cur = &patch;
  const Json* d = &def;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!d->is_object() || !d->contains(key)) throw ConfigError("unknown key " + dotted);
    d = &(*d)[key];
    if (dot == std::string::npos) {
      (*cur)[key] = parsed;
      break;
    }
    cur = &(*cur)[key];
    start = dot + 1;
  }
  Json merged = config;
  check(def, patch, "", merged);
  config = merged;
}

std::string config_hash(const Json& config) {
  // nlohmann::json (unordered) sorts object keys.
  return sha256_hex(nlohmann::json::parse(config.dump()).dump());
}

}  // namespace bbmlab
