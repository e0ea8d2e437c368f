#include "common.hpp"

#include <array>
#include <sstream>

#include <openssl/evp.h>

#include "sras/error.hpp"
#include "sras/io.hpp"

namespace sras::cli {

Json RunConfig::to_json() const {
  Json j;
  j["seed"] = seed;
  j["eps_reg"] = eps_reg;
  j["eps_spd"] = eps_spd;
  j["chunk_size"] = chunk_size;
  return j;
}

std::string Inputs::read(const std::string& role, const std::string& path) {
  std::string text = io::read_file(path);
  Json entry;
  entry["path"] = path;
  entry["sha256"] = sha256_hex(text);
  entries_.emplace_back(role, std::move(entry));
  return text;
}

Json Inputs::to_json() const {
  Json j = Json::array();
  for (const auto& [role, entry] : entries_) {
    Json e;
    e["role"] = role;
    e.update(entry);
    j.push_back(std::move(e));
  }
  return j;
}

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::filesystem::path output_path(const RunConfig& config, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative() && !config.output_dir.empty()) p = std::filesystem::path(config.output_dir) / p;
  return p;
}

void write_output(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  io::write_file(path.string(), content);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json provenance(const std::string& command, const RunConfig& config, const Inputs& inputs, Json parameters) {
  Json p;
  p["tool"] = "sras";
  p["version"] = "0.1.0";
  p["command"] = command;
  p["config"] = config.to_json();
  p["parameters"] = std::move(parameters);
  p["inputs"] = inputs.to_json();
  return p;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace sras::cli
