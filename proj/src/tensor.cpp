#include "glstm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "glstm/errors.hpp"

namespace glstm {

std::size_t extent_product(std::span<const std::size_t> extents) noexcept {
  return std::accumulate(extents.begin(), extents.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(std::span<const std::size_t> extents) {
  return fmt::format("[{}]", fmt::join(extents, "x"));
}

Tensor::Tensor(std::vector<std::size_t> extents, std::vector<double> values)
    : shape(std::move(extents)), data(std::move(values)) {
  if (extent_product(shape) != data.size()) {
    throw DimensionError(fmt::format("tensor shape {} does not hold {} values",
                                     shape_string(shape), data.size()));
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> extents) { return filled(std::move(extents), 0.0); }

Tensor Tensor::filled(std::vector<std::size_t> extents, double value) {
  const std::size_t n = extent_product(extents);
  return Tensor(std::move(extents), std::vector<double>(n, value));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::identity(std::size_t n) {
  Tensor t = zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (shape.size() != 2) throw DimensionError("rows() on a tensor of rank " + std::to_string(shape.size()));
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (shape.size() != 2) throw DimensionError("cols() on a tensor of rank " + std::to_string(shape.size()));
  return shape[1];
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  return {data.data() + r * c, c};
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t c = cols();
  return {data.data() + r * c, c};
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double value) noexcept { std::fill(data.begin(), data.end(), value); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape != b.shape) {
    throw DimensionError(fmt::format("{}: shapes {} and {} differ", what, shape_string(a.shape),
                                     shape_string(b.shape)));
  }
}

}  // namespace glstm
