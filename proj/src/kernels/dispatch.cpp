#include "glstm/kernels.hpp"

namespace glstm::kernels {

namespace serial {
void slic_assign(const LabField&, std::span<const SlicCenter>, double, double, std::span<int>);
void slic_update(const LabField&, std::span<const int>, std::span<SlicCenter>);
void segment_mean(std::span<const double>, std::size_t, const Segments&, std::span<double>);
void confusion_tally(std::span<const int>, std::span<const int>, std::size_t, std::span<std::int64_t>);
}  // namespace serial

namespace parallel {
void slic_assign(const LabField&, std::span<const SlicCenter>, double, double, std::span<int>);
void slic_update(const LabField&, std::span<const int>, std::span<SlicCenter>);
void segment_mean(std::span<const double>, std::size_t, const Segments&, std::span<double>);
void confusion_tally(std::span<const int>, std::span<const int>, std::size_t, std::span<std::int64_t>);
}  // namespace parallel

void slic_assign(Backend backend, const LabField& img, std::span<const SlicCenter> centers, double step,
                 double compactness, std::span<int> labels) {
  if (backend == Backend::serial) {
    serial::slic_assign(img, centers, step, compactness, labels);
  } else {
    parallel::slic_assign(img, centers, step, compactness, labels);
  }
}

void slic_update(Backend backend, const LabField& img, std::span<const int> labels,
                 std::span<SlicCenter> centers) {
  if (backend == Backend::serial) {
    serial::slic_update(img, labels, centers);
  } else {
    parallel::slic_update(img, labels, centers);
  }
}

void segment_mean(Backend backend, std::span<const double> x, std::size_t cols, const Segments& groups,
                  std::span<double> out) {
  if (backend == Backend::serial) {
    serial::segment_mean(x, cols, groups, out);
  } else {
    parallel::segment_mean(x, cols, groups, out);
  }
}

void confusion_tally(Backend backend, std::span<const int> pred, std::span<const int> gt, std::size_t classes,
                     std::span<std::int64_t> counts) {
  if (backend == Backend::serial) {
    serial::confusion_tally(pred, gt, classes, counts);
  } else {
    parallel::confusion_tally(pred, gt, classes, counts);
  }
}

}  // namespace glstm::kernels
