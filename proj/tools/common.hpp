#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sras/parallel.hpp"
#include "sras/spd.hpp"

namespace sras::cli {

using Json = nlohmann::ordered_json;

/// Options shared by every subcommand. `threads` never reaches an output
/// file: results must not depend on it.
struct RunConfig {
  std::uint64_t seed = 0;
  double eps_reg = kDefaultEpsReg;
  double eps_spd = kDefaultEpsSpd;
  unsigned threads = 1;
  Index chunk_size = 64;
  std::string output_dir;

  Execution exec() const { return {threads, chunk_size}; }
  Json to_json() const;
};

/// Input files read during a run, digested for the provenance block.
class Inputs {
 public:
  std::string read(const std::string& role, const std::string& path);
  Json to_json() const;

 private:
  std::vector<std::pair<std::string, Json>> entries_;
};

std::string sha256_hex(const std::string& data);

/// Resolves `path` against the configured output directory when relative.
std::filesystem::path output_path(const RunConfig& config, const std::string& path);
void write_output(const std::filesystem::path& path, const std::string& content);
std::string dump(const Json& j);

Json provenance(const std::string& command, const RunConfig& config, const Inputs& inputs, Json parameters = Json::object());

std::vector<std::string> split_list(const std::string& text);

void add_analysis_commands(CLI::App& app, RunConfig& config);
void add_grid_commands(CLI::App& app, RunConfig& config);
void add_synth_commands(CLI::App& app, RunConfig& config);

}  // namespace sras::cli
