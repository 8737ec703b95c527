#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "glstm/params.hpp"
#include "glstm/tensor.hpp"

namespace glstm {

/// Ordered name -> tensor list; the on-disk order is the list order.
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

inline constexpr std::string_view kCheckpointMagic{"GLSTMCKP", 8};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers little-endian):
//   magic "GLSTMCKP" | u32 version | u32 entry count
//   per entry: u32 name length | name bytes | u32 rank | u64 extents[rank]
//              | f64 payload[product(extents)]
std::string encode_checkpoint(const NamedTensors& entries);
NamedTensors decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const NamedTensors& entries);
NamedTensors read_checkpoint(const std::filesystem::path& path);

NamedTensors to_named(const ParamStore& store);
void save_params(const std::filesystem::path& path, const ParamStore& store);
/// Overwrites every parameter of `store` from the file. Names and shapes
/// must match exactly; extra file entries are an error.
void load_params(const std::filesystem::path& path, ParamStore& store);

}  // namespace glstm
