#include "glstm/config.hpp"

#include <charconv>
#include <functional>
#include <map>

#include <fmt/format.h>

#include "glstm/errors.hpp"
#include "glstm/io.hpp"

namespace glstm {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, value), {std::string(key)});
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw ConfigError(fmt::format("{}: '{}' is not on/off", key, value), {std::string(key)});
}

template <typename F>
auto wrap(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()), {std::string(key)});
  }
}

struct Field {
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = [] {
    std::map<std::string, Field, std::less<>> t;
    auto size = [&](const char* name, auto getter) {
      t[name] = Field{[getter](RunConfig& c, std::string_view k, std::string_view v) {
                        getter(c) = parse_number<std::size_t>(k, v);
                      },
                      [getter](const RunConfig& c) { return fmt::format("{}", getter(const_cast<RunConfig&>(c))); }};
    };
    auto integer = [&](const char* name, auto getter) {
      t[name] = Field{[getter](RunConfig& c, std::string_view k, std::string_view v) {
                        getter(c) = parse_number<int>(k, v);
                      },
                      [getter](const RunConfig& c) { return fmt::format("{}", getter(const_cast<RunConfig&>(c))); }};
    };
    auto real = [&](const char* name, auto getter) {
      t[name] = Field{[getter](RunConfig& c, std::string_view k, std::string_view v) {
                        getter(c) = parse_number<double>(k, v);
                      },
                      [getter](const RunConfig& c) { return fmt::format("{}", getter(const_cast<RunConfig&>(c))); }};
    };
    size("dim", [](RunConfig& c) -> std::size_t& { return c.parser.dim; });
    integer("layers", [](RunConfig& c) -> int& { return c.parser.layers; });
    size("labels", [](RunConfig& c) -> std::size_t& { return c.parser.labels; });
    integer("background", [](RunConfig& c) -> int& { return c.parser.background; });
    size("superpixels", [](RunConfig& c) -> std::size_t& { return c.parser.superpixels; });
    real("compactness", [](RunConfig& c) -> double& { return c.parser.compactness; });
    integer("slic_iterations", [](RunConfig& c) -> int& { return c.parser.slic_iterations; });
    t["scheduler"] = Field{
        [](RunConfig& c, std::string_view k, std::string_view v) {
          c.parser.scheduler = wrap(k, [&] { return parse_scheme(v); });
        },
        [](const RunConfig& c) { return std::string(scheme_name(c.parser.scheduler)); }};
    t["forget"] = Field{
        [](RunConfig& c, std::string_view k, std::string_view v) {
          c.parser.forget = wrap(k, [&] { return parse_variant(v); });
        },
        [](const RunConfig& c) { return std::string(variant_name(c.parser.forget)); }};
    t["residual"] = Field{[](RunConfig& c, std::string_view k, std::string_view v) { c.parser.residual = parse_bool(k, v); },
                          [](const RunConfig& c) { return std::string(c.parser.residual ? "on" : "off"); }};
    t["head"] = Field{
        [](RunConfig& c, std::string_view k, std::string_view v) {
          c.parser.head = wrap(k, [&] { return parse_head_mode(v); });
        },
        [](const RunConfig& c) { return std::string(head_mode_name(c.parser.head)); }};
    t["gate_input"] = Field{
        [](RunConfig& c, std::string_view k, std::string_view v) {
          if (v == "previous") {
            c.parser.gate_input = NeighborGateInput::previous_layer;
          } else if (v == "latest") {
            c.parser.gate_input = NeighborGateInput::latest;
          } else {
            throw ConfigError(fmt::format("{}: expected previous or latest, got '{}'", k, v), {std::string(k)});
          }
        },
        [](const RunConfig& c) {
          return std::string(c.parser.gate_input == NeighborGateInput::latest ? "latest" : "previous");
        }};
    t["focus_label"] = Field{
        [](RunConfig& c, std::string_view k, std::string_view v) {
          if (v == "none") {
            c.parser.focus_label.reset();
          } else {
            c.parser.focus_label = parse_number<int>(k, v);
          }
        },
        [](const RunConfig& c) {
          return c.parser.focus_label ? fmt::format("{}", *c.parser.focus_label) : std::string("none");
        }};
    real("lr_new", [](RunConfig& c) -> double& { return c.sgd.lr_new; });
    real("lr_pretrained", [](RunConfig& c) -> double& { return c.sgd.lr_pretrained; });
    real("momentum", [](RunConfig& c) -> double& { return c.sgd.momentum; });
    real("weight_decay", [](RunConfig& c) -> double& { return c.sgd.weight_decay; });
    size("batch", [](RunConfig& c) -> std::size_t& { return c.sgd.batch; });
    integer("epochs_a", [](RunConfig& c) -> int& { return c.sgd.epochs_a; });
    integer("epochs_b", [](RunConfig& c) -> int& { return c.sgd.epochs_b; });
    size("image_width", [](RunConfig& c) -> std::size_t& { return c.toy.width; });
    size("image_height", [](RunConfig& c) -> std::size_t& { return c.toy.height; });
    integer("parts", [](RunConfig& c) -> int& { return c.toy.parts; });
    real("noise", [](RunConfig& c) -> double& { return c.toy.noise; });
    real("brightness_jitter", [](RunConfig& c) -> double& { return c.toy.brightness_jitter; });
    size("train_samples", [](RunConfig& c) -> std::size_t& { return c.train_samples; });
    size("test_samples", [](RunConfig& c) -> std::size_t& { return c.test_samples; });
    t["seed"] = Field{[](RunConfig& c, std::string_view k, std::string_view v) { c.seed = parse_number<std::uint64_t>(k, v); },
                      [](const RunConfig& c) { return fmt::format("{}", c.seed); }};
    return t;
  }();
  return table;
}

}  // namespace

void validate_config(const RunConfig& cfg) {
  auto check = [](const char* key, auto&& f) {
    try {
      f();
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what(), {key});
    }
  };
  check("parser", [&] { cfg.parser.validate(); });
  check("sgd", [&] { cfg.sgd.validate(); });
  if (cfg.toy.parts < 1 || static_cast<std::size_t>(cfg.toy.parts) + 1 > cfg.parser.labels) {
    throw ConfigError(fmt::format("parts = {} needs labels >= parts + 1 (labels = {})", cfg.toy.parts, cfg.parser.labels),
                      {"parts"});
  }
  if (cfg.toy.width < 32 || cfg.toy.height < 32) {
    throw ConfigError("toy images must be at least 32x32", {"image_width", "image_height"});
  }
  if (cfg.train_samples == 0) throw ConfigError("train_samples must be positive", {"train_samples"});
}

ParserConfig toy_parser_defaults() {
  ParserConfig p;
  p.compactness = 40.0;
  return p;
}

SgdConfig toy_sgd_defaults() {
  SgdConfig s;
  s.lr_new = 0.1;
  s.lr_pretrained = 0.01;
  return s;
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError(fmt::format("unknown key '{}'", key), {std::string(key)});
  it->second.set(cfg, key, value);
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::vector<std::string> unknown;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("line {}: expected key = value", line_no), {fmt::format("line {}", line_no)});
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (fields().find(key) == fields().end()) {
      unknown.emplace_back(key);
      continue;
    }
    set_config_value(cfg, key, value);
  }
  if (!unknown.empty()) {
    throw ConfigError(fmt::format("unknown config keys: {}", fmt::join(unknown, ", ")), unknown);
  }
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string config_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, field] : fields()) out += fmt::format("{} = {}\n", key, field.get(cfg));
  return out;
}

std::vector<std::string_view> config_keys() {
  std::vector<std::string_view> out;
  for (const auto& [key, field] : fields()) out.push_back(key);
  return out;
}

}  // namespace glstm
