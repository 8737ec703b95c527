#include "glstm/params.hpp"

#include "glstm/errors.hpp"

namespace glstm {

Gradients::Gradients(const ParamStore& store) {
  grads_.reserve(store.size());
  for (const auto& p : store) grads_.push_back(Tensor::zeros(p.value.shape));
}

void Gradients::zero() noexcept {
  for (auto& g : grads_) g.fill(0.0);
}

void Gradients::add(const Gradients& other) {
  if (other.size() != size()) throw DimensionError("gradient sets of different length");
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    require_same_shape(grads_[i], other.grads_[i], "Gradients::add");
    for (std::size_t k = 0; k < grads_[i].size(); ++k) grads_[i][k] += other.grads_[i][k];
  }
}

void Gradients::scale(double s) noexcept {
  for (auto& g : grads_) {
    for (double& v : g.data) v *= s;
  }
}

std::size_t ParamStore::add(std::string name, Tensor value, bool decay) {
  if (index_.contains(name)) throw ArgumentError("duplicate parameter name '" + name + "'");
  const std::size_t idx = params_.size();
  index_.emplace(name, idx);
  params_.push_back(Parameter{std::move(name), std::move(value), decay});
  grads_ = Gradients(*this);
  return idx;
}

std::optional<std::size_t> ParamStore::find(std::string_view name) const {
  if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
  return std::nullopt;
}

std::size_t ParamStore::index_of(std::string_view name) const {
  if (auto idx = find(name)) return *idx;
  throw ArgumentError("unknown parameter '" + std::string(name) + "'");
}

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

}  // namespace glstm
