#pragma once

// Experiment configuration. Each command's default configuration doubles as
// its schema: user files may only use keys present there, with matching
// types. A null default marks an optional number.

#include <string>
#include <vector>

#include "bbmlab/error.hpp"
#include "json.hpp"

namespace bbmlab {

class ConfigError : public Error {
 public:
  using Error::Error;
};

using Json = nlohmann::ordered_json;

std::vector<std::string> command_names();
// Throws ConfigError for unknown commands.
Json default_config(const std::string& command);
// Defaults overlaid with `user`; rejects unknown keys and type mismatches.
Json merge_config(const std::string& command, const Json& user);
// Set a dotted key from command-line text, parsed by the default's type.
void override_key(const std::string& command, Json& config, const std::string& dotted,
                  const std::string& text);
// SHA-256 of the canonical (sorted-key, compact) serialization.
std::string config_hash(const Json& config);

}  // namespace bbmlab
