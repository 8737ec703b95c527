#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace glstm {

/// Dense row-major f64 array. A vector has one extent, a matrix two; the
/// scalar produced by reductions has shape {1}.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> extents, std::vector<double> values);

  static Tensor zeros(std::vector<std::size_t> extents);
  static Tensor filled(std::vector<std::size_t> extents, double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor scalar(double value);
  static Tensor identity(std::size_t n);

  [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
  [[nodiscard]] std::size_t rank() const noexcept { return shape.size(); }
  [[nodiscard]] std::size_t rows() const;
  [[nodiscard]] std::size_t cols() const;
  [[nodiscard]] bool is_scalar() const noexcept { return data.size() == 1; }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  [[nodiscard]] std::span<const double> row(std::size_t r) const;
  [[nodiscard]] std::span<double> row(std::size_t r);

  [[nodiscard]] bool all_finite() const noexcept;
  void fill(double value) noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

[[nodiscard]] std::size_t extent_product(std::span<const std::size_t> extents) noexcept;
[[nodiscard]] std::string shape_string(std::span<const std::size_t> extents);

/// Throws DimensionError with `what` unless the shapes are identical.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace glstm
