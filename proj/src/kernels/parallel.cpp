// OpenMP versions of the kernels. Each reproduces the serial reference bit
// for bit: per-output reductions run in the same element order, and only
// exact (integer) reductions are split across threads.

#include <algorithm>
#include <limits>

#include "glstm/kernels.hpp"
#include "glstm/parallel.hpp"

namespace glstm::kernels::parallel {

void slic_assign(const LabField& img, std::span<const SlicCenter> centers, double step, double compactness,
                 std::span<int> labels) {
  const double spatial_weight = (compactness * compactness) / (step * step);
  const auto height = static_cast<std::ptrdiff_t>(img.height);

  std::vector<std::vector<std::size_t>> row_centers(img.height);
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const WindowRange ys = window_range(centers[k].y, step, img.height);
    for (std::size_t y = ys.lo; y <= ys.hi; ++y) row_centers[y].push_back(k);
  }

  // Rows are independent: a pixel's winner depends only on the centers whose
  // windows cover it.
#pragma omp parallel num_threads(worker_count())
  {
    std::vector<double> best(img.width);
#pragma omp for schedule(static)
    for (std::ptrdiff_t yi = 0; yi < height; ++yi) {
      const auto y = static_cast<std::size_t>(yi);
      std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
      const std::size_t row = y * img.width;
      // Ascending k with strict < keeps the smallest id on ties.
      for (std::size_t k : row_centers[y]) {
        const WindowRange xs = window_range(centers[k].x, step, img.width);
        for (std::size_t x = xs.lo; x <= xs.hi; ++x) {
          const std::size_t p = row + x;
          const double d = slic_distance(centers[k], img.l[p], img.a[p], img.b[p], static_cast<double>(x),
                                         static_cast<double>(y), spatial_weight);
          if (d < best[x]) {
            best[x] = d;
            labels[p] = static_cast<int>(k);
          }
        }
      }
    }
  }
}

void slic_update(const LabField& img, std::span<const int> labels, std::span<SlicCenter> centers) {
  const Segments members = Segments::from_labels(labels, centers.size());
  const auto count = static_cast<std::ptrdiff_t>(centers.size());
#pragma omp parallel for schedule(dynamic, 8) num_threads(worker_count())
  for (std::ptrdiff_t ki = 0; ki < count; ++ki) {
    const auto k = static_cast<std::size_t>(ki);
    if (members.size_of(k) == 0) continue;
    SlicCenter s;
    for (std::size_t p : members.group(k)) {
      s.l += img.l[p];
      s.a += img.a[p];
      s.b += img.b[p];
      s.x += static_cast<double>(p % img.width);
      s.y += static_cast<double>(p / img.width);
    }
    const auto n = static_cast<double>(members.size_of(k));
    centers[k] = {s.l / n, s.a / n, s.b / n, s.x / n, s.y / n};
  }
}

void segment_mean(std::span<const double> x, std::size_t cols, const Segments& groups, std::span<double> out) {
  const auto count = static_cast<std::ptrdiff_t>(groups.count());
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (std::ptrdiff_t ri = 0; ri < count; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
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
  const auto n = static_cast<std::ptrdiff_t>(pred.size());
#pragma omp parallel num_threads(worker_count())
  {
    std::vector<std::int64_t> local(classes * classes, 0);
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      ++local[static_cast<std::size_t>(gt[k]) * classes + static_cast<std::size_t>(pred[k])];
    }
#pragma omp critical(glstm_confusion_merge)
    for (std::size_t c = 0; c < local.size(); ++c) counts[c] += local[c];
  }
}

}  // namespace glstm::kernels::parallel
