#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glstm/graph.hpp"
#include "glstm/kernels.hpp"
#include "glstm/superpixel.hpp"
#include "glstm/tensor.hpp"

namespace glstm {

/// Per-node label scores [R x L] plus the designated background label.
struct ConfidenceMap {
  Tensor scores;
  int background = 0;

  [[nodiscard]] std::size_t node_count() const { return scores.rows(); }
  [[nodiscard]] std::size_t label_count() const { return scores.cols(); }
  /// argmax label; ties go to the smaller id.
  [[nodiscard]] int assigned(std::size_t node) const;
  [[nodiscard]] double assigned_confidence(std::size_t node) const;
  [[nodiscard]] bool foreground(std::size_t node) const { return assigned(node) != background; }
  /// Highest score over non-background labels.
  [[nodiscard]] double max_foreground(std::size_t node) const;
};

/// Averages per-pixel score rows [H*W x L] over each region. Throws
/// ArgumentError on size mismatch or when a pixel row does not sum to 1.
ConfidenceMap node_confidences(const Tensor& pixel_scores, const SuperpixelMap& sp, int background,
                               Backend backend = Backend::parallel);

enum class Scheme : std::uint8_t { cds, bfs_location, bfs_confidence, dfs_location, dfs_confidence };
enum class ChildRule : std::uint8_t { location, confidence };

struct UpdateSchedule {
  std::vector<std::size_t> order;
  Scheme scheme = Scheme::cds;
  friend bool operator==(const UpdateSchedule&, const UpdateSchedule&) = default;
};

std::string_view scheme_name(Scheme s) noexcept;
/// Accepts "cds", "bfs-location", "bfs-confidence", "dfs-location",
/// "dfs-confidence". Throws ArgumentError otherwise.
Scheme parse_scheme(std::string_view name);

/// Confidence-driven order. Foreground nodes come first by assigned-label
/// confidence (descending), then background nodes by their best foreground
/// confidence (descending). Ties: smaller centroid x, smaller centroid y,
/// smaller id. With `focus_label`, every node is instead ranked by that
/// label's score.
UpdateSchedule cds_order(const ConfidenceMap& cm, const NodeGraph& g, std::optional<int> focus_label = {});

UpdateSchedule bfs_order(const NodeGraph& g, ChildRule rule, const ConfidenceMap& cm, std::size_t start);
UpdateSchedule dfs_order(const NodeGraph& g, ChildRule rule, const ConfidenceMap& cm, std::size_t start);

/// Dispatches on the scheme; BFS/DFS start from the CDS starting node.
UpdateSchedule make_schedule(Scheme scheme, const ConfidenceMap& cm, const NodeGraph& g,
                             std::optional<int> focus_label = {});

[[nodiscard]] bool is_permutation_of(std::span<const std::size_t> order, std::size_t n);

/// One id per line.
std::string schedule_text(const UpdateSchedule& s);
std::vector<std::size_t> parse_schedule_text(std::string_view text);

}  // namespace glstm
