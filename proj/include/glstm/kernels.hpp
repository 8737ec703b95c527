#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version; the two produce bit-identical results, which the tests
// check and the benchmark compares for speed.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "glstm/segments.hpp"

namespace glstm {

enum class Backend : std::uint8_t { serial, parallel };

namespace kernels {

/// Per-pixel CIELAB (or scaled intensity) colour planes.
struct LabField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> l, a, b;
};

struct SlicCenter {
  double l = 0, a = 0, b = 0;
  double x = 0, y = 0;
};

/// Squared SLIC distance: colour term plus spatial term scaled by
/// (compactness / step)^2.
inline double slic_distance(const SlicCenter& c, double l, double a, double b, double x, double y,
                            double spatial_weight) noexcept {
  const double dl = l - c.l;
  const double da = a - c.a;
  const double db = b - c.b;
  const double dx = x - c.x;
  const double dy = y - c.y;
  const double color = dl * dl + da * da + db * db;
  const double space = dx * dx + dy * dy;
  return color + space * spatial_weight;
}

/// Inclusive pixel range searched around a center coordinate.
struct WindowRange {
  std::size_t lo, hi;
};
inline WindowRange window_range(double center, double step, std::size_t extent) noexcept {
  const double lo = std::floor(center - step);
  const double hi = std::ceil(center + step);
  const std::size_t max = extent - 1;
  return {lo < 0.0 ? 0 : static_cast<std::size_t>(lo),
          hi > static_cast<double>(max) ? max : static_cast<std::size_t>(hi)};
}

/// Assigns each pixel to the nearest center whose search window covers it;
/// ties go to the smaller center id. Pixels no window covers keep their
/// current label.
void slic_assign(Backend backend, const LabField& img, std::span<const SlicCenter> centers, double step,
                 double compactness, std::span<int> labels);

/// Moves every non-empty cluster's center to the mean of its pixels.
void slic_update(Backend backend, const LabField& img, std::span<const int> labels,
                 std::span<SlicCenter> centers);

/// out[r * cols + c] = mean of x[p * cols + c] over p in group r.
void segment_mean(Backend backend, std::span<const double> x, std::size_t cols, const Segments& groups,
                  std::span<double> out);

/// counts[g * classes + p] += number of pixels with ground truth g and
/// prediction p. Labels must already be validated to lie in [0, classes).
void confusion_tally(Backend backend, std::span<const int> pred, std::span<const int> gt, std::size_t classes,
                     std::span<std::int64_t> counts);

}  // namespace kernels
}  // namespace glstm
