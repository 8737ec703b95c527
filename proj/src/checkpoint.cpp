#include "glstm/checkpoint.hpp"

#include <fmt/format.h>

#include "glstm/errors.hpp"
#include "glstm/io.hpp"

namespace glstm {

std::string encode_checkpoint(const NamedTensors& entries) {
  std::string out(kCheckpointMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t e : t.shape) put_u64(out, e);
    for (double v : t.data) put_f64(out, v);
  }
  return out;
}

NamedTensors decode_checkpoint(std::string_view bytes) {
  ByteReader in(bytes);
  if (in.take(kCheckpointMagic.size()) != kCheckpointMagic) throw DataError("not a checkpoint file");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw DataError(fmt::format("unsupported checkpoint version {}", version));
  }
  const std::uint32_t count = in.u32();
  NamedTensors entries;
  entries.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name(in.take(in.u32()));
    const std::uint32_t rank = in.u32();
    std::vector<std::size_t> shape(rank);
    for (auto& e : shape) e = in.u64();
    std::vector<double> data(extent_product(shape));
    for (double& v : data) v = in.f64();
    entries.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (!in.done()) throw DataError("trailing bytes after checkpoint entries");
  return entries;
}

void write_checkpoint(const std::filesystem::path& path, const NamedTensors& entries) {
  write_file_atomic(path, encode_checkpoint(entries));
}

NamedTensors read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

NamedTensors to_named(const ParamStore& store) {
  NamedTensors out;
  out.reserve(store.size());
  for (const auto& p : store) out.emplace_back(p.name, p.value);
  return out;
}

void save_params(const std::filesystem::path& path, const ParamStore& store) {
  write_checkpoint(path, to_named(store));
}

void load_params(const std::filesystem::path& path, ParamStore& store) {
  const NamedTensors entries = read_checkpoint(path);
  if (entries.size() != store.size()) {
    throw DataError(fmt::format("checkpoint has {} entries, model expects {}", entries.size(), store.size()));
  }
  for (const auto& [name, t] : entries) {
    const auto idx = store.find(name);
    if (!idx) throw DataError("checkpoint entry '" + name + "' is not a model parameter");
    if (store[*idx].value.shape != t.shape) {
      throw DataError(fmt::format("checkpoint entry '{}' has shape {}, expected {}", name,
                                  shape_string(t.shape), shape_string(store[*idx].value.shape)));
    }
    store[*idx].value = t;
  }
}

}  // namespace glstm
