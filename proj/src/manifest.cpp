#include "bbmlab/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

#include "bbmlab/error.hpp"

namespace bbmlab {

namespace {

class Digest {
 public:
  Digest() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("sha256: digest initialization failed");
    }
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("sha256: digest update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw Error("sha256: digest failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += kHex[md[i] >> 4];
      out += kHex[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  Digest d;
  d.update(data.data(), data.size());
  return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("sha256: cannot open " + path.string());
  Digest d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.flush()) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::ordered_json manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["tool_version"] = m.tool_version;
  j["config_hash"] = m.config_hash;
  j["wall_time_s"] = m.wall_time_s;
  j["seeds"] = m.seeds;
  j["config"] = m.config;
  j["summary"] = m.summary;
  auto& files = j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& e : m.outputs) files.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  return j;
}

RunManifest parse_manifest(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.wall_time_s = j.value("wall_time_s", 0.0);
    if (j.contains("seeds")) m.seeds = j["seeds"];
    if (j.contains("config")) m.config = j["config"];
    if (j.contains("summary")) m.summary = j["summary"];
    for (const auto& e : j.at("outputs")) {
      m.outputs.push_back({e.at("path").get<std::string>(), e.at("sha256").get<std::string>(),
                           e.value("bytes", std::uintmax_t{0})});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(std::string("malformed manifest: ") + ex.what());
  }
  return m;
}

ManifestCheck verify_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot open manifest " + manifest_path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(std::string("malformed manifest: ") + ex.what());
  }
  const auto m = parse_manifest(j);
  const auto root = manifest_path.parent_path();
  ManifestCheck check;
  for (const auto& e : m.outputs) {
    const auto p = root / e.path;
    if (!std::filesystem::exists(p)) {
      check.missing.push_back(e.path);
    } else if (sha256_file(p) != e.sha256) {
      check.mismatched.push_back(e.path);
    }
  }
  check.ok = check.missing.empty() && check.mismatched.empty();
  return check;
}

}  // namespace bbmlab
