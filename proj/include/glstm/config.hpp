#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "glstm/model.hpp"
#include "glstm/toy.hpp"
#include "glstm/train.hpp"

namespace glstm {

/// Parser settings for the 64x64 toy task: SLIC compactness raised to 40
/// because the rendering noise otherwise dominates the colour term.
ParserConfig toy_parser_defaults();
/// SGD settings for the toy task: both rates 100x the library defaults,
/// keeping their 10:1 ratio.
SgdConfig toy_sgd_defaults();

/// Everything a training run needs. The file form is one `key = value` per
/// line; `#` starts a comment. docs/config.md lists the keys.
struct RunConfig {
  ParserConfig parser = toy_parser_defaults();
  SgdConfig sgd = toy_sgd_defaults();
  ToyConfig toy;
  std::size_t train_samples = 200;
  std::size_t test_samples = 50;
  std::uint64_t seed = 1;
};

/// Raised for unknown keys, malformed lines and bad values. `keys` lists the
/// offending keys (or line numbers for lines without one).
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& what, std::vector<std::string> keys)
      : std::invalid_argument(what), keys_(std::move(keys)) {}
  [[nodiscard]] const std::vector<std::string>& keys() const noexcept { return keys_; }

 private:
  std::vector<std::string> keys_;
};

/// Starts from the defaults and applies every assignment in `text`.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Applies one assignment; throws ConfigError for an unknown key or value.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);
/// Throws ConfigError when the combined settings are inconsistent.
void validate_config(const RunConfig& cfg);
/// Every key with its current value, in a form parse_config reads back.
std::string config_text(const RunConfig& cfg);
/// All recognised keys.
std::vector<std::string_view> config_keys();

}  // namespace glstm
