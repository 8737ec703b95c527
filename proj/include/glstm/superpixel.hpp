#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glstm/image.hpp"
#include "glstm/kernels.hpp"
#include "glstm/segments.hpp"
#include "glstm/tape.hpp"
#include "glstm/tensor.hpp"

namespace glstm {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Partition of an image into R labelled regions.
struct SuperpixelMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<int> labels;                  // per pixel, in [0, R)
  std::shared_ptr<const Segments> regions;  // per-region pixel indices, ascending
  std::vector<Point2> centroids;            // pixel units

  [[nodiscard]] std::size_t region_count() const noexcept { return centroids.size(); }
  [[nodiscard]] std::size_t pixel_count() const noexcept { return width * height; }
  [[nodiscard]] std::span<const std::size_t> pixels_of(std::size_t r) const { return regions->group(r); }

  /// Builds a map from any externally supplied label image. Labels must lie
  /// in [0, R) with every id used; connectivity is not required here.
  static SuperpixelMap from_labels(std::size_t width, std::size_t height, std::vector<int> labels);

  friend bool operator==(const SuperpixelMap& a, const SuperpixelMap& b) {
    return a.width == b.width && a.height == b.height && a.labels == b.labels && a.centroids == b.centroids;
  }
};

struct SlicParams {
  std::size_t k = 1000;
  double compactness = 10.0;
  int iterations = 10;
  /// Recorded for provenance; SLIC itself has no stochastic step.
  std::uint64_t seed = 0;
};

/// SLIC over-segmentation into roughly k compact regions. Colour distance is
/// CIELAB for RGB input and 100 * intensity for grayscale. Every returned
/// region is 4-connected; stray components are merged into the largest
/// adjacent region. Throws ArgumentError if k is 0 or exceeds the pixel
/// count, or compactness is not positive.
SuperpixelMap slic(const Image& img, const SlicParams& params, Backend backend = Backend::parallel);

kernels::LabField to_lab(const Image& img);

/// Region means of a per-pixel feature matrix [H*W x d] -> [R x d].
Tensor pool_features(const Tensor& field, const SuperpixelMap& sp, Backend backend = Backend::parallel);
/// Differentiable form; each member pixel receives 1/|region| of the
/// region's adjoint.
Var pool_features(Tape& tape, Var field, const SuperpixelMap& sp);

/// Best pixel accuracy reachable by giving every region one label (its
/// ground-truth majority).
double quantization_oracle(const SuperpixelMap& sp, std::span<const int> gt);

/// Majority ground-truth label per region; ties go to the smaller label.
std::vector<int> majority_labels(const SuperpixelMap& sp, std::span<const int> gt);

/// True iff every region is a single 4-connected component.
bool regions_four_connected(const SuperpixelMap& sp);

/// Bilinear resize of an [h x w x d] field (row-major, channel-last) to
/// [out_h x out_w x d], sampling at pixel centers.
Tensor upsample_bilinear(const Tensor& field, std::size_t out_h, std::size_t out_w);

// Superpixel map file: text header "SPMAP\n<width> <height>\n<regions>\n"
// followed by width*height little-endian u32 region ids in row-major order.
std::string encode_superpixel_map(const SuperpixelMap& sp);
SuperpixelMap decode_superpixel_map(std::string_view bytes);
void write_superpixel_map(const std::filesystem::path& path, const SuperpixelMap& sp);
SuperpixelMap read_superpixel_map(const std::filesystem::path& path);

/// Copy of the image (as RGB) with region boundaries painted red.
Image boundary_overlay(const Image& img, const SuperpixelMap& sp);

}  // namespace glstm
