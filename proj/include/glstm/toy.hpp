#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "glstm/image.hpp"
#include "glstm/superpixel.hpp"

namespace glstm {

// Synthetic articulated-figure parsing data: a head disc, a torso bar and
// upper/lower segments for two arms and two legs on a plain background.

struct Disc {
  Point2 center;
  double radius = 0.0;
  [[nodiscard]] bool contains(double x, double y) const noexcept;
  [[nodiscard]] double area() const noexcept;
};

/// Rectangle of the given half-width around the segment a-b.
struct Bar {
  Point2 a, b;
  double half_width = 0.0;
  [[nodiscard]] bool contains(double x, double y) const noexcept;
  [[nodiscard]] double area() const noexcept;
};

enum class BodyPart : std::uint8_t { head, torso, upper_arm, lower_arm, upper_leg, lower_leg };
inline constexpr std::size_t kBodyPartCount = 6;

/// One posed figure. Shapes are painted in list order; later shapes cover
/// earlier ones.
struct ToyFigure {
  struct Shape {
    BodyPart part;
    bool is_disc;
    Disc disc;
    Bar bar;
    [[nodiscard]] bool contains(double x, double y) const noexcept {
      return is_disc ? disc.contains(x, y) : bar.contains(x, y);
    }
  };
  std::vector<Shape> shapes;
  /// Per-image brightness factor applied to every base colour.
  double brightness = 1.0;
};

struct ToyConfig {
  std::size_t width = 64;
  std::size_t height = 64;
  /// Number of part labels, 1..6. Label 0 is background; with fewer than
  /// six labels the later body parts share the last label.
  int parts = 6;
  double noise = 0.05;
  /// Half-range of the per-image brightness factor.
  double brightness_jitter = 0.25;
};

struct ToySample {
  Image image;
  std::vector<int> gt;  // per pixel, in [0, parts]
  std::uint64_t seed = 0;
};

/// Label a body part receives under `parts` part labels.
int part_label(BodyPart part, int parts) noexcept;

/// Samples a pose that fits inside the canvas. Throws DataError after 100
/// rejected attempts.
ToyFigure sample_figure(std::mt19937_64& rng, const ToyConfig& cfg);
/// Rasterises a figure at pixel centers (no anti-aliasing), adds noise and
/// quantizes to 8 bits per channel, so a PPM round trip is exact.
ToySample render_figure(const ToyFigure& fig, const ToyConfig& cfg, std::mt19937_64& rng);

/// n samples; sample i depends only on (seed, i).
std::vector<ToySample> gen_toy(std::uint64_t seed, std::size_t n, const ToyConfig& cfg);

/// Writes NNNN.ppm images and NNNN_gt.pgm label maps into `dir`.
void write_dataset(const std::filesystem::path& dir, const std::vector<ToySample>& samples);
/// Reads the pairs written by write_dataset, in file-name order.
std::vector<ToySample> read_dataset(const std::filesystem::path& dir);

}  // namespace glstm
