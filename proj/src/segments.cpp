#include "glstm/segments.hpp"

#include <string>

#include "glstm/errors.hpp"

namespace glstm {

Segments Segments::from_labels(std::span<const int> labels, std::size_t groups) {
  Segments s;
  s.offsets.assign(groups + 1, 0);
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= groups) {
      throw ArgumentError("label " + std::to_string(l) + " outside [0, " + std::to_string(groups) + ")");
    }
    ++s.offsets[static_cast<std::size_t>(l) + 1];
  }
  for (std::size_t r = 0; r < groups; ++r) s.offsets[r + 1] += s.offsets[r];
  s.members.resize(labels.size());
  std::vector<std::size_t> cursor(s.offsets.begin(), s.offsets.end() - 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s.members[cursor[static_cast<std::size_t>(labels[i])]++] = i;
  }
  return s;
}

}  // namespace glstm
