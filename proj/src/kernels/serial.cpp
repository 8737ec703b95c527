// Reference implementations of the data-parallel kernels.

#include <limits>

#include "glstm/kernels.hpp"

namespace glstm::kernels::serial {

void slic_assign(const LabField& img, std::span<const SlicCenter> centers, double step, double compactness,
                 std::span<int> labels) {
  const double spatial_weight = (compactness * compactness) / (step * step);
  std::vector<double> best(img.width * img.height, std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const SlicCenter& c = centers[k];
    const WindowRange xs = window_range(c.x, step, img.width);
    const WindowRange ys = window_range(c.y, step, img.height);
    for (std::size_t y = ys.lo; y <= ys.hi; ++y) {
      for (std::size_t x = xs.lo; x <= xs.hi; ++x) {
        const std::size_t p = y * img.width + x;
        const double d = slic_distance(c, img.l[p], img.a[p], img.b[p], static_cast<double>(x),
                                       static_cast<double>(y), spatial_weight);
        if (d < best[p]) {
          best[p] = d;
          labels[p] = static_cast<int>(k);
        }
      }
    }
  }
}

void slic_update(const LabField& img, std::span<const int> labels, std::span<SlicCenter> centers) {
  std::vector<SlicCenter> sums(centers.size());
  std::vector<std::size_t> counts(centers.size(), 0);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const std::size_t p = y * img.width + x;
      const auto k = static_cast<std::size_t>(labels[p]);
      SlicCenter& s = sums[k];
      s.l += img.l[p];
      s.a += img.a[p];
      s.b += img.b[p];
      s.x += static_cast<double>(x);
      s.y += static_cast<double>(y);
      ++counts[k];
    }
  }
  for (std::size_t k = 0; k < centers.size(); ++k) {
    if (counts[k] == 0) continue;
    const auto n = static_cast<double>(counts[k]);
    centers[k] = {sums[k].l / n, sums[k].a / n, sums[k].b / n, sums[k].x / n, sums[k].y / n};
  }
}

void segment_mean(std::span<const double> x, std::size_t cols, const Segments& groups, std::span<double> out) {
  for (std::size_t r = 0; r < groups.count(); ++r) {
    double* o = out.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) o[c] = 0.0;
    for (std::size_t p : groups.group(r)) {
      for (std::size_t c = 0; c < cols; ++c) o[c] += x[p * cols + c];
    }
    const auto n = static_cast<double>(groups.size_of(r));
    for (std::size_t c = 0; c < cols; ++c) o[c] /= n;
  }
}

void confusion_tally(std::span<const int> pred, std::span<const int> gt, std::size_t classes,
                     std::span<std::int64_t> counts) {
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++counts[static_cast<std::size_t>(gt[i]) * classes + static_cast<std::size_t>(pred[i])];
  }
}

}  // namespace glstm::kernels::serial
