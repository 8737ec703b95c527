#include "manifest.hpp"

#include <array>
#include <cstdio>
#include <memory>

#include "glstm/io.hpp"

#ifndef GLSTM_SOURCE_DIR
#define GLSTM_SOURCE_DIR "."
#endif

namespace glstm::cli {

Manifest::Manifest(std::string command, std::filesystem::path out)
    : command_(std::move(command)), out_(std::move(out)), start_(std::chrono::steady_clock::now()) {}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["command"] = command_;
  j["args"] = args_;
  j["config"] = config_;
  j["seeds"] = seeds_;
  j["output_dir"] = out_.string();
  j["outputs"] = outputs_;
  j["git_describe"] = git_describe();
  nlohmann::json timings = timings_;
  timings["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  j["timings"] = timings;
  return j;
}

void Manifest::write() const {
  std::filesystem::create_directories(out_);
  write_file_atomic(out_ / "manifest.json", to_json().dump(2) + "\n");
}

std::string git_describe() {
  const std::string cmd = std::string("git -C \"") + GLSTM_SOURCE_DIR + "\" describe --always --dirty 2>/dev/null";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) return "unknown";
  std::array<char, 256> buf{};
  std::string out;
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe.get()) != nullptr) out += buf.data();
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

}  // namespace glstm::cli
