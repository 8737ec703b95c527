#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "glstm/superpixel.hpp"
#include "glstm/tensor.hpp"

namespace glstm {

/// Undirected region-adjacency graph over superpixel nodes. Immutable after
/// construction: adjacency lists are sorted, symmetric, loop- and
/// duplicate-free.
class NodeGraph {
 public:
  NodeGraph() = default;

  /// Validates and normalises explicit adjacency lists (any order). Throws
  /// ArgumentError on asymmetry, self-loops, duplicates or bad ids.
  static NodeGraph from_adjacency(std::vector<std::vector<std::size_t>> adjacency, std::vector<Point2> centroids,
                                  Tensor features);

  [[nodiscard]] std::size_t node_count() const noexcept { return adjacency_.size(); }
  [[nodiscard]] std::size_t edge_count() const noexcept;
  /// Throws ArgumentError for an out-of-range id.
  [[nodiscard]] std::span<const std::size_t> neighbors(std::size_t i) const;
  [[nodiscard]] std::size_t degree(std::size_t i) const { return neighbors(i).size(); }
  [[nodiscard]] const Point2& centroid(std::size_t i) const { return centroids_.at(i); }
  [[nodiscard]] const std::vector<Point2>& centroids() const noexcept { return centroids_; }
  /// [R x d] pooled node features f_i.
  [[nodiscard]] const Tensor& features() const noexcept { return features_; }
  [[nodiscard]] double mean_degree() const noexcept;

 private:
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<Point2> centroids_;
  Tensor features_;
};

/// Nodes are regions; (i, j) is an edge iff some pixel of i is 4-adjacent
/// to some pixel of j. `features` must have one row per region.
NodeGraph build_graph(const SuperpixelMap& sp, Tensor features);

inline std::span<const std::size_t> neighbors(const NodeGraph& g, std::size_t i) { return g.neighbors(i); }

/// Per-node "already updated in this pass" markers. Flags only go from
/// false to true.
class VisitFlags {
 public:
  explicit VisitFlags(std::size_t n) : flags_(n, 0) {}
  [[nodiscard]] bool visited(std::size_t i) const { return flags_.at(i) != 0; }
  /// Throws ContractError if i was already marked.
  void mark(std::size_t i);
  [[nodiscard]] bool all_visited() const noexcept;
  [[nodiscard]] std::size_t size() const noexcept { return flags_.size(); }

 private:
  std::vector<char> flags_;
};

/// "i j" per line with i < j, ascending.
std::string edge_list(const NodeGraph& g);
/// Writes <stem>.edges (edge list) and <stem>.ckpt holding "features"
/// [R x d] and "centroids" [R x 2].
void write_graph_dump(const std::filesystem::path& stem, const NodeGraph& g);

}  // namespace glstm
