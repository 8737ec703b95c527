#include "glstm/graph.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "glstm/checkpoint.hpp"
#include "glstm/errors.hpp"
#include "glstm/io.hpp"

namespace glstm {

NodeGraph NodeGraph::from_adjacency(std::vector<std::vector<std::size_t>> adjacency,
                                    std::vector<Point2> centroids, Tensor features) {
  const std::size_t n = adjacency.size();
  if (centroids.size() != n) throw ArgumentError("one centroid per node required");
  if (features.rank() != 2 || features.shape[0] != n) {
    throw ArgumentError(fmt::format("features {} do not have one row per node ({})",
                                    shape_string(features.shape), n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& adj = adjacency[i];
    std::sort(adj.begin(), adj.end());
    if (std::adjacent_find(adj.begin(), adj.end()) != adj.end()) {
      throw ArgumentError(fmt::format("node {} lists a neighbour twice", i));
    }
    for (std::size_t j : adj) {
      if (j >= n) throw ArgumentError(fmt::format("node {} lists unknown node {}", i, j));
      if (j == i) throw ArgumentError(fmt::format("node {} has a self-loop", i));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : adjacency[i]) {
      if (!std::binary_search(adjacency[j].begin(), adjacency[j].end(), i)) {
        throw ArgumentError(fmt::format("edge ({}, {}) is not symmetric", i, j));
      }
    }
  }
  NodeGraph g;
  g.adjacency_ = std::move(adjacency);
  g.centroids_ = std::move(centroids);
  g.features_ = std::move(features);
  return g;
}

std::size_t NodeGraph::edge_count() const noexcept {
  std::size_t twice = 0;
  for (const auto& adj : adjacency_) twice += adj.size();
  return twice / 2;
}

std::span<const std::size_t> NodeGraph::neighbors(std::size_t i) const {
  if (i >= adjacency_.size()) {
    throw ArgumentError(fmt::format("node {} out of range for a {}-node graph", i, adjacency_.size()));
  }
  return adjacency_[i];
}

double NodeGraph::mean_degree() const noexcept {
  if (adjacency_.empty()) return 0.0;
  return 2.0 * static_cast<double>(edge_count()) / static_cast<double>(adjacency_.size());
}

NodeGraph build_graph(const SuperpixelMap& sp, Tensor features) {
  const std::size_t r = sp.region_count();
  if (features.rank() != 2 || features.shape[0] != r) {
    throw ArgumentError(fmt::format("{} feature rows for {} regions",
                                    features.rank() == 2 ? features.shape[0] : 0, r));
  }
  std::vector<std::vector<std::size_t>> adj(r);
  auto link = [&](int a, int b) {
    if (a == b) return;
    adj[static_cast<std::size_t>(a)].push_back(static_cast<std::size_t>(b));
    adj[static_cast<std::size_t>(b)].push_back(static_cast<std::size_t>(a));
  };
  const std::size_t w = sp.width;
  for (std::size_t y = 0; y < sp.height; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = y * w + x;
      if (x + 1 < w) link(sp.labels[p], sp.labels[p + 1]);
      if (y + 1 < sp.height) link(sp.labels[p], sp.labels[p + w]);
    }
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return NodeGraph::from_adjacency(std::move(adj), sp.centroids, std::move(features));
}

void VisitFlags::mark(std::size_t i) {
  if (flags_.at(i)) throw ContractError(fmt::format("node {} updated twice in one pass", i));
  flags_[i] = 1;
}

bool VisitFlags::all_visited() const noexcept {
  return std::all_of(flags_.begin(), flags_.end(), [](char f) { return f != 0; });
}

std::string edge_list(const NodeGraph& g) {
  std::string out;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    for (std::size_t j : g.neighbors(i)) {
      if (i < j) out += fmt::format("{} {}\n", i, j);
    }
  }
  return out;
}

void write_graph_dump(const std::filesystem::path& stem, const NodeGraph& g) {
  std::filesystem::path edges = stem;
  edges += ".edges";
  std::filesystem::path ckpt = stem;
  ckpt += ".ckpt";
  write_file_atomic(edges, edge_list(g));
  Tensor cent = Tensor::zeros({g.node_count(), 2});
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    cent.at(i, 0) = g.centroid(i).x;
    cent.at(i, 1) = g.centroid(i).y;
  }
  write_checkpoint(ckpt, {{"features", g.features()}, {"centroids", cent}});
}

}  // namespace glstm
