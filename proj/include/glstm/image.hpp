#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace glstm {

/// Row-major interleaved image with values in [0, 1].
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;  // 1 or 3
  std::vector<double> data;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::size_t c, std::vector<double> values);
  static Image filled(std::size_t w, std::size_t h, std::size_t c, double value);

  [[nodiscard]] std::size_t pixel_count() const noexcept { return width * height; }
  double& at(std::size_t x, std::size_t y, std::size_t c) { return data[(y * width + x) * channels + c]; }
  double at(std::size_t x, std::size_t y, std::size_t c) const { return data[(y * width + x) * channels + c]; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Reads binary PPM (P6) or PGM (P5) with maxval <= 255.
Image read_pnm(const std::filesystem::path& path);
/// Writes P6 for 3-channel images and P5 for 1-channel ones, 8-bit.
void write_pnm(const std::filesystem::path& path, const Image& img);

/// Writes an 8-bit P5 map of small non-negative integer labels.
void write_label_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
                     std::span<const int> labels);
std::vector<int> read_label_pgm(const std::filesystem::path& path, std::size_t& width, std::size_t& height);

}  // namespace glstm
