#include "glstm/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "glstm/errors.hpp"
#include "glstm/io.hpp"

namespace glstm {
namespace {

struct PnmHeader {
  char kind = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t maxval = 0;
  std::size_t payload = 0;  // byte offset of the raster
};

PnmHeader parse_header(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw DataError("not a binary PGM/PPM file");
  }
  PnmHeader h;
  h.kind = bytes[1];
  std::size_t pos = 2;
  auto next_number = [&]() -> std::size_t {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      throw DataError("malformed PNM header");
    }
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      ++pos;
    }
    return v;
  };
  h.width = next_number();
  h.height = next_number();
  h.maxval = next_number();
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw DataError("malformed PNM header");
  }
  h.payload = pos + 1;
  if (h.width == 0 || h.height == 0 || h.maxval == 0 || h.maxval > 255) {
    throw DataError("unsupported PNM dimensions or maxval");
  }
  return h;
}

}  // namespace

Image::Image(std::size_t w, std::size_t h, std::size_t c, std::vector<double> values)
    : width(w), height(h), channels(c), data(std::move(values)) {
  if (c != 1 && c != 3) throw ArgumentError("images have 1 or 3 channels");
  if (data.size() != w * h * c) throw DimensionError("image data size does not match its dimensions");
  for (double v : data) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("image values must lie in [0, 1]");
  }
}

Image Image::filled(std::size_t w, std::size_t h, std::size_t c, double value) {
  return Image(w, h, c, std::vector<double>(w * h * c, value));
}

Image read_pnm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const PnmHeader h = parse_header(bytes);
  const std::size_t channels = h.kind == '6' ? 3 : 1;
  const std::size_t n = h.width * h.height * channels;
  if (bytes.size() - h.payload < n) throw DataError("truncated PNM raster in " + path.string());
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = static_cast<double>(static_cast<unsigned char>(bytes[h.payload + i])) / static_cast<double>(h.maxval);
  }
  return Image(h.width, h.height, channels, std::move(data));
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
  std::string out = fmt::format("P{}\n{} {}\n255\n", img.channels == 3 ? 6 : 5, img.width, img.height);
  out.reserve(out.size() + img.data.size());
  for (double v : img.data) {
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
  write_file_atomic(path, out);
}

void write_label_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
                     std::span<const int> labels) {
  if (labels.size() != width * height) throw DimensionError("label map size does not match dimensions");
  std::string out = fmt::format("P5\n{} {}\n255\n", width, height);
  for (int l : labels) {
    if (l < 0 || l > 255) throw ArgumentError("label does not fit an 8-bit PGM");
    out.push_back(static_cast<char>(static_cast<unsigned char>(l)));
  }
  write_file_atomic(path, out);
}

std::vector<int> read_label_pgm(const std::filesystem::path& path, std::size_t& width, std::size_t& height) {
  const std::string bytes = read_file(path);
  const PnmHeader h = parse_header(bytes);
  if (h.kind != '5') throw DataError("label maps must be P5");
  const std::size_t n = h.width * h.height;
  if (bytes.size() - h.payload < n) throw DataError("truncated label map " + path.string());
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<unsigned char>(bytes[h.payload + i]);
  width = h.width;
  height = h.height;
  return labels;
}

}  // namespace glstm
