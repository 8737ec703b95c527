#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace glstm {

/// Compressed list of index groups: group r owns
/// members[offsets[r] .. offsets[r + 1]). Members of a group are ascending.
struct Segments {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> members;

  [[nodiscard]] std::size_t count() const noexcept { return offsets.size() - 1; }
  [[nodiscard]] std::size_t size_of(std::size_t r) const noexcept {
    return offsets[r + 1] - offsets[r];
  }
  [[nodiscard]] std::span<const std::size_t> group(std::size_t r) const noexcept {
    return {members.data() + offsets[r], size_of(r)};
  }

  /// Groups element indices by their label; labels must lie in [0, groups).
  static Segments from_labels(std::span<const int> labels, std::size_t groups);
};

}  // namespace glstm
