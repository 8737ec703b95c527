#include "glstm/schedule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <limits>

#include <fmt/format.h>

#include "glstm/errors.hpp"

namespace glstm {
namespace {

bool left_of(const NodeGraph& g, std::size_t a, std::size_t b) {
  const Point2& pa = g.centroid(a);
  const Point2& pb = g.centroid(b);
  if (pa.x != pb.x) return pa.x < pb.x;
  if (pa.y != pb.y) return pa.y < pb.y;
  return a < b;
}

// Strict weak order "a before b" for a child rule.
auto child_order(ChildRule rule, const NodeGraph& g, const ConfidenceMap& cm) {
  return [rule, &g, &cm](std::size_t a, std::size_t b) {
    if (rule == ChildRule::confidence) {
      const double ca = cm.max_foreground(a);
      const double cb = cm.max_foreground(b);
      if (ca != cb) return ca > cb;
    }
    return left_of(g, a, b);
  };
}

void check_sizes(const ConfidenceMap& cm, const NodeGraph& g) {
  if (cm.node_count() != g.node_count()) {
    throw ArgumentError(fmt::format("confidence map has {} nodes, graph has {}", cm.node_count(), g.node_count()));
  }
}

template <class Before>
std::size_t best_unvisited(const std::vector<char>& visited, Before before) {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < visited.size(); ++i) {
    if (visited[i]) continue;
    if (best == std::numeric_limits<std::size_t>::max() || before(i, best)) best = i;
  }
  return best;
}

}  // namespace

int ConfidenceMap::assigned(std::size_t node) const {
  const auto row = scores.row(node);
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

double ConfidenceMap::assigned_confidence(std::size_t node) const {
  return scores.at(node, static_cast<std::size_t>(assigned(node)));
}

double ConfidenceMap::max_foreground(std::size_t node) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < label_count(); ++c) {
    if (static_cast<int>(c) != background) best = std::max(best, scores.at(node, c));
  }
  return best;
}

ConfidenceMap node_confidences(const Tensor& pixel_scores, const SuperpixelMap& sp, int background,
                               Backend backend) {
  if (pixel_scores.rank() != 2 || pixel_scores.shape[0] != sp.pixel_count()) {
    throw ArgumentError(fmt::format("pixel scores {} do not match a {}-pixel map", shape_string(pixel_scores.shape),
                                    sp.pixel_count()));
  }
  const std::size_t labels = pixel_scores.shape[1];
  if (background < 0 || static_cast<std::size_t>(background) >= labels) {
    throw ArgumentError("background label out of range");
  }
  for (std::size_t p = 0; p < pixel_scores.shape[0]; ++p) {
    double s = 0.0;
    for (double v : pixel_scores.row(p)) {
      if (v < 0.0) throw ArgumentError(fmt::format("pixel {} has a negative score", p));
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ArgumentError(fmt::format("pixel {} scores sum to {}", p, s));
  }
  return ConfidenceMap{pool_features(pixel_scores, sp, backend), background};
}

std::string_view scheme_name(Scheme s) noexcept {
  switch (s) {
    case Scheme::cds:
      return "cds";
    case Scheme::bfs_location:
      return "bfs-location";
    case Scheme::bfs_confidence:
      return "bfs-confidence";
    case Scheme::dfs_location:
      return "dfs-location";
    case Scheme::dfs_confidence:
      return "dfs-confidence";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::cds, Scheme::bfs_location, Scheme::bfs_confidence, Scheme::dfs_location,
                   Scheme::dfs_confidence}) {
    if (scheme_name(s) == name) return s;
  }
  throw ArgumentError(fmt::format("unknown scheduler '{}'", name));
}

UpdateSchedule cds_order(const ConfidenceMap& cm, const NodeGraph& g, std::optional<int> focus_label) {
  check_sizes(cm, g);
  std::vector<std::size_t> order(g.node_count());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  if (focus_label) {
    if (*focus_label < 0 || static_cast<std::size_t>(*focus_label) >= cm.label_count()) {
      throw ArgumentError("focus label out of range");
    }
    const auto c = static_cast<std::size_t>(*focus_label);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double ca = cm.scores.at(a, c);
      const double cb = cm.scores.at(b, c);
      if (ca != cb) return ca > cb;
      return left_of(g, a, b);
    });
    return {std::move(order), Scheme::cds};
  }

  std::vector<char> fg(order.size());
  std::vector<double> key(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    fg[i] = cm.foreground(i) ? 1 : 0;
    key[i] = fg[i] ? cm.assigned_confidence(i) : cm.max_foreground(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (fg[a] != fg[b]) return fg[a] > fg[b];
    if (key[a] != key[b]) return key[a] > key[b];
    return left_of(g, a, b);
  });
  return {std::move(order), Scheme::cds};
}

UpdateSchedule bfs_order(const NodeGraph& g, ChildRule rule, const ConfidenceMap& cm, std::size_t start) {
  check_sizes(cm, g);
  const std::size_t n = g.node_count();
  if (start >= n) throw ArgumentError(fmt::format("start node {} out of range", start));
  const auto before = child_order(rule, g, cm);
  std::vector<char> visited(n, 0);
  std::vector<std::size_t> order;
  order.reserve(n);
  std::deque<std::size_t> queue{start};
  visited[start] = 1;
  std::vector<std::size_t> children;
  while (true) {
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      order.push_back(u);
      children.clear();
      for (std::size_t v : g.neighbors(u)) {
        if (!visited[v]) children.push_back(v);
      }
      std::sort(children.begin(), children.end(), before);
      for (std::size_t v : children) {
        visited[v] = 1;
        queue.push_back(v);
      }
    }
    if (order.size() == n) break;
    const std::size_t next = best_unvisited(visited, before);
    visited[next] = 1;
    queue.push_back(next);
  }
  return {std::move(order), rule == ChildRule::location ? Scheme::bfs_location : Scheme::bfs_confidence};
}

UpdateSchedule dfs_order(const NodeGraph& g, ChildRule rule, const ConfidenceMap& cm, std::size_t start) {
  check_sizes(cm, g);
  const std::size_t n = g.node_count();
  if (start >= n) throw ArgumentError(fmt::format("start node {} out of range", start));
  const auto before = child_order(rule, g, cm);

  struct Frame {
    std::vector<std::size_t> children;
    std::size_t next = 0;
  };
  std::vector<char> visited(n, 0);
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<Frame> stack;
  auto enter = [&](std::size_t u) {
    visited[u] = 1;
    order.push_back(u);
    Frame f;
    const auto nb = g.neighbors(u);
    f.children.assign(nb.begin(), nb.end());
    std::sort(f.children.begin(), f.children.end(), before);
    stack.push_back(std::move(f));
  };

  std::size_t root = start;
  while (true) {
    enter(root);
    while (!stack.empty()) {
      Frame& top = stack.back();
      if (top.next == top.children.size()) {
        stack.pop_back();
        continue;
      }
      const std::size_t v = top.children[top.next++];
      if (!visited[v]) enter(v);
    }
    if (order.size() == n) break;
    root = best_unvisited(visited, before);
  }
  return {std::move(order), rule == ChildRule::location ? Scheme::dfs_location : Scheme::dfs_confidence};
}

UpdateSchedule make_schedule(Scheme scheme, const ConfidenceMap& cm, const NodeGraph& g,
                             std::optional<int> focus_label) {
  UpdateSchedule cds = cds_order(cm, g, focus_label);
  if (scheme == Scheme::cds || g.node_count() == 0) return cds;
  const std::size_t start = cds.order.front();
  switch (scheme) {
    case Scheme::bfs_location:
      return bfs_order(g, ChildRule::location, cm, start);
    case Scheme::bfs_confidence:
      return bfs_order(g, ChildRule::confidence, cm, start);
    case Scheme::dfs_location:
      return dfs_order(g, ChildRule::location, cm, start);
    case Scheme::dfs_confidence:
      return dfs_order(g, ChildRule::confidence, cm, start);
    case Scheme::cds:
      break;
  }
  return cds;
}

bool is_permutation_of(std::span<const std::size_t> order, std::size_t n) {
  if (order.size() != n) return false;
  std::vector<char> seen(n, 0);
  for (std::size_t i : order) {
    if (i >= n || seen[i]) return false;
    seen[i] = 1;
  }
  return true;
}

std::string schedule_text(const UpdateSchedule& s) {
  std::string out;
  for (std::size_t i : s.order) out += fmt::format("{}\n", i);
  return out;
}

std::vector<std::size_t> parse_schedule_text(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc{} || ptr != line.data() + line.size()) {
      throw DataError(fmt::format("bad schedule line '{}'", line));
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace glstm
