#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace glstm::cli {

/// Record of one command run, written to <out>/manifest.json.
class Manifest {
 public:
  Manifest(std::string command, std::filesystem::path out);

  nlohmann::json& args() noexcept { return args_; }
  void set_config(const std::string& text) { config_ = text; }
  void add_seed(std::uint64_t seed) { seeds_.push_back(seed); }
  void add_output(const std::string& name) { outputs_.push_back(name); }
  /// Records the wall-clock seconds spent in a named phase.
  void time(const std::string& phase, double seconds) { timings_[phase] = seconds; }

  [[nodiscard]] nlohmann::json to_json() const;
  void write() const;

 private:
  std::string command_;
  std::filesystem::path out_;
  nlohmann::json args_ = nlohmann::json::object();
  std::string config_;
  std::vector<std::uint64_t> seeds_;
  std::vector<std::string> outputs_;
  nlohmann::json timings_ = nlohmann::json::object();
  std::chrono::steady_clock::time_point start_;
};

/// `git describe --always --dirty` of the source tree, or "unknown".
std::string git_describe();

}  // namespace glstm::cli
