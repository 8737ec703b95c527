#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "glstm/tensor.hpp"

namespace glstm {

/// Learning-rate group. Parameters introduced in the current training stage
/// are `fresh`; those carried over from an earlier stage are `pretrained`.
enum class ParamGroup : std::uint8_t { fresh, pretrained };

struct Parameter {
  std::string name;
  Tensor value;
  /// Weight decay applies to weights only; biases opt out.
  bool decay = true;
  double lr_mult = 1.0;
  ParamGroup group = ParamGroup::fresh;
};

class ParamStore;

/// Per-parameter gradient buffers, one per ParamStore entry with matching
/// shapes. Workers own one each; a reducer combines them.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParamStore& store);

  [[nodiscard]] std::size_t size() const noexcept { return grads_.size(); }
  Tensor& operator[](std::size_t i) { return grads_[i]; }
  const Tensor& operator[](std::size_t i) const { return grads_[i]; }

  void zero() noexcept;
  void add(const Gradients& other);
  void scale(double s) noexcept;

 private:
  std::vector<Tensor> grads_;
};

class ParamStore {
 public:
  /// Adds a parameter and returns its index. Names must be unique.
  std::size_t add(std::string name, Tensor value, bool decay = true);

  [[nodiscard]] std::size_t size() const noexcept { return params_.size(); }
  [[nodiscard]] bool empty() const noexcept { return params_.empty(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const;
  /// Throws ArgumentError when the name is unknown.
  [[nodiscard]] std::size_t index_of(std::string_view name) const;
  [[nodiscard]] bool contains(std::string_view name) const { return find(name).has_value(); }

  Tensor& value(std::string_view name) { return params_[index_of(name)].value; }
  const Tensor& value(std::string_view name) const { return params_[index_of(name)].value; }

  /// Gradient accumulators; same shapes as the values.
  Gradients& grads() noexcept { return grads_; }
  const Gradients& grads() const noexcept { return grads_; }
  void zero_grad() noexcept { grads_.zero(); }

  [[nodiscard]] std::size_t scalar_count() const noexcept;

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
  Gradients grads_;
};

}  // namespace glstm
