#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <random>
#include <tuple>

#include "glstm/errors.hpp"
#include "glstm/schedule.hpp"
#include "support.hpp"

using namespace glstm;

namespace {

ConfidenceMap two_label(std::vector<double> fg_scores) {
  Tensor s = Tensor::zeros({fg_scores.size(), 2});
  for (std::size_t i = 0; i < fg_scores.size(); ++i) {
    s.at(i, 0) = 1.0 - fg_scores[i];
    s.at(i, 1) = fg_scores[i];
  }
  return ConfidenceMap{s, 0};
}

NodeGraph chain(std::vector<double> xs) {
  std::vector<std::vector<std::size_t>> adj(xs.size());
  std::vector<Point2> c;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) {
      adj[i].push_back(i - 1);
      adj[i - 1].push_back(i);
    }
    c.push_back({xs[i], 0.0});
  }
  return NodeGraph::from_adjacency(adj, c, Tensor::zeros({xs.size(), 0}));
}

// Rank key spelled out directly from the ordering rule.
using Key = std::tuple<int, double, double, double, std::size_t>;

Key rule_key(const ConfidenceMap& cm, const NodeGraph& g, std::size_t i) {
  const auto row = cm.scores.row(i);
  std::size_t arg = 0;
  for (std::size_t c = 1; c < row.size(); ++c)
    if (row[c] > row[arg]) arg = c;
  double best_fg = -1.0;
  for (std::size_t c = 0; c < row.size(); ++c)
    if (static_cast<int>(c) != cm.background) best_fg = std::max(best_fg, row[c]);
  const bool fg = static_cast<int>(arg) != cm.background;
  return {fg ? 0 : 1, -(fg ? row[arg] : best_fg), g.centroid(i).x, g.centroid(i).y, i};
}

std::function<bool(std::size_t, std::size_t)> reference_child_rule(ChildRule rule, const NodeGraph& g,
                                                                   const ConfidenceMap& cm) {
  return [rule, &g, &cm](std::size_t a, std::size_t b) {
    if (rule == ChildRule::confidence) {
      double fa = -1.0, fb = -1.0;
      for (std::size_t c = 0; c < cm.label_count(); ++c) {
        if (static_cast<int>(c) == cm.background) continue;
        fa = std::max(fa, cm.scores.at(a, c));
        fb = std::max(fb, cm.scores.at(b, c));
      }
      if (fa != fb) return fa > fb;
    }
    return std::make_tuple(g.centroid(a).x, g.centroid(a).y, a) < std::make_tuple(g.centroid(b).x, g.centroid(b).y, b);
  };
}

std::vector<std::size_t> reference_bfs(const NodeGraph& g, ChildRule rule, const ConfidenceMap& cm,
                                       std::size_t start) {
  const auto before = reference_child_rule(rule, g, cm);
  std::vector<bool> seen(g.node_count(), false);
  std::vector<std::size_t> out;
  std::queue<std::size_t> q;
  q.push(start);
  seen[start] = true;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    out.push_back(u);
    std::vector<std::size_t> kids;
    for (std::size_t v : g.neighbors(u))
      if (!seen[v]) kids.push_back(v);
    std::sort(kids.begin(), kids.end(), before);
    for (std::size_t v : kids) {
      seen[v] = true;
      q.push(v);
    }
  }
  return out;
}

void reference_dfs_visit(const NodeGraph& g, const std::function<bool(std::size_t, std::size_t)>& before,
                         std::size_t u, std::vector<bool>& seen, std::vector<std::size_t>& out) {
  seen[u] = true;
  out.push_back(u);
  std::vector<std::size_t> kids(g.neighbors(u).begin(), g.neighbors(u).end());
  std::sort(kids.begin(), kids.end(), before);
  for (std::size_t v : kids)
    if (!seen[v]) reference_dfs_visit(g, before, v, seen, out);
}

std::vector<std::size_t> reference_dfs(const NodeGraph& g, ChildRule rule, const ConfidenceMap& cm,
                                       std::size_t start) {
  std::vector<bool> seen(g.node_count(), false);
  std::vector<std::size_t> out;
  reference_dfs_visit(g, reference_child_rule(rule, g, cm), start, seen, out);
  return out;
}

}  // namespace

TEST_CASE("node confidences average member pixels") {
  const SuperpixelMap sp = SuperpixelMap::from_labels(4, 1, {0, 0, 0, 1});
  const Tensor px = Tensor::matrix(4, 2, {0.8, 0.2, 0.6, 0.4, 0.4, 0.6, 0.3, 0.7});
  const ConfidenceMap cm = node_confidences(px, sp, 0);
  CHECK(cm.scores.at(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(cm.scores.at(0, 1) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(cm.scores.at(1, 0) == 0.3);
  CHECK(cm.scores.at(1, 1) == 0.7);
  CHECK(cm.assigned(0) == 0);
  CHECK(cm.assigned(1) == 1);
  const Tensor flat = Tensor::matrix(4, 2, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  const ConfidenceMap even = node_confidences(flat, sp, 0);
  CHECK(even.scores == Tensor::filled({2, 2}, 0.5));
  CHECK(even.assigned(0) == 0);

  CHECK_THROWS_AS(node_confidences(Tensor::matrix(3, 2, {1, 0, 1, 0, 1, 0}), sp, 0), ArgumentError);
  CHECK_THROWS_AS(node_confidences(Tensor::matrix(4, 2, {0.9, 0.2, 0.6, 0.4, 0.4, 0.6, 0.3, 0.7}), sp, 0),
                  ArgumentError);
  CHECK_THROWS_AS(node_confidences(px, sp, 2), ArgumentError);
}

TEST_CASE("cds examples") {
  const NodeGraph g = chain({0, 1, 2});
  CHECK(cds_order(two_label({0.9, 0.7, 0.8}), g).order == std::vector<std::size_t>{0, 2, 1});

  const NodeGraph tie = NodeGraph::from_adjacency({{1}, {0}}, {{40, 0}, {10, 0}}, Tensor::zeros({2, 0}));
  CHECK(cds_order(two_label({0.9, 0.9}), tie).order == std::vector<std::size_t>{1, 0});

  // Two foreground nodes (0.6, 0.8) and two background nodes (0.3, 0.1).
  const NodeGraph four = chain({0, 1, 2, 3});
  CHECK(cds_order(two_label({0.3, 0.6, 0.1, 0.8}), four).order == std::vector<std::size_t>{3, 1, 0, 2});

  const NodeGraph same_x = NodeGraph::from_adjacency({{1}, {0}}, {{5, 9}, {5, 2}}, Tensor::zeros({2, 0}));
  CHECK(cds_order(two_label({0.7, 0.7}), same_x).order == std::vector<std::size_t>{1, 0});
  const NodeGraph same_xy = NodeGraph::from_adjacency({{1}, {0}}, {{5, 2}, {5, 2}}, Tensor::zeros({2, 0}));
  CHECK(cds_order(two_label({0.7, 0.7}), same_xy).order == std::vector<std::size_t>{0, 1});

  CHECK_THROWS_AS(cds_order(two_label({0.5}), g), ArgumentError);
}

TEST_CASE("cds matches the rule applied pairwise on random instances") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const NodeGraph g = testing::random_graph(rng, n, 0.2);
    const ConfidenceMap cm = testing::random_confidences(rng, n, 1 + rng() % 4, trial % 2 == 0);
    const auto order = cds_order(cm, g).order;
    REQUIRE(is_permutation_of(order, n));
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) CHECK(rule_key(cm, g, order[a]) < rule_key(cm, g, order[b]));
    // The foreground block is non-increasing in assigned confidence.
    for (std::size_t k = 1; k < n; ++k)
      if (cm.foreground(order[k]) && cm.foreground(order[k - 1]))
        CHECK(cm.assigned_confidence(order[k - 1]) >= cm.assigned_confidence(order[k]));
  }
}

TEST_CASE("cds is invariant under monotone transforms of the scores") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 15;
    const NodeGraph g = testing::random_graph(rng, n, 0.3);
    const ConfidenceMap cm = testing::random_confidences(rng, n, 4, trial % 2 == 0);
    ConfidenceMap warped = cm;
    for (double& v : warped.scores.data) v = std::pow(v, 3.0) * 2.0 + 0.1;
    CHECK(cds_order(cm, g) == cds_order(warped, g));
  }
}

TEST_CASE("focus label ranks every node by that label") {
  const NodeGraph g = chain({0, 1, 2});
  Tensor s = Tensor::matrix(3, 3, {0.1, 0.2, 0.7, 0.5, 0.4, 0.1, 0.2, 0.7, 0.1});
  const ConfidenceMap cm{s, 0};
  CHECK(cds_order(cm, g, 1).order == std::vector<std::size_t>{2, 1, 0});
  CHECK(cds_order(cm, g, 0).order == std::vector<std::size_t>{1, 2, 0});
  CHECK_THROWS_AS(cds_order(cm, g, 3), ArgumentError);
}

TEST_CASE("bfs and dfs examples") {
  const NodeGraph path = chain({5, 7, 9});
  const ConfidenceMap cm = two_label({0.5, 0.5, 0.5});
  CHECK(bfs_order(path, ChildRule::location, cm, 1).order == std::vector<std::size_t>{1, 0, 2});
  CHECK(dfs_order(path, ChildRule::location, cm, 0).order == std::vector<std::size_t>{0, 1, 2});
  CHECK(dfs_order(path, ChildRule::location, cm, 1).order == std::vector<std::size_t>{1, 0, 2});
  CHECK(bfs_order(path, ChildRule::confidence, two_label({0.2, 0.5, 0.9}), 1).order ==
        std::vector<std::size_t>{1, 2, 0});

  const NodeGraph star = NodeGraph::from_adjacency({{1, 2, 3, 4}, {0}, {0}, {0}, {0}},
                                                   {{5, 5}, {8, 0}, {1, 0}, {9, 0}, {3, 0}}, Tensor::zeros({5, 0}));
  const ConfidenceMap sc = two_label({0.5, 0.6, 0.1, 0.9, 0.3});
  CHECK(bfs_order(star, ChildRule::location, sc, 0).order == std::vector<std::size_t>{0, 2, 4, 1, 3});
  CHECK(bfs_order(star, ChildRule::confidence, sc, 0).order == std::vector<std::size_t>{0, 3, 1, 4, 2});
  CHECK(dfs_order(star, ChildRule::confidence, sc, 0).order == std::vector<std::size_t>{0, 3, 1, 4, 2});

  const NodeGraph single = chain({0});
  CHECK(dfs_order(single, ChildRule::location, two_label({0.4}), 0).order == std::vector<std::size_t>{0});
  CHECK(bfs_order(single, ChildRule::location, two_label({0.4}), 0).order == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(bfs_order(path, ChildRule::location, cm, 3), ArgumentError);
  CHECK_THROWS_AS(dfs_order(path, ChildRule::location, cm, 3), ArgumentError);
}

TEST_CASE("dfs on a triangle follows the sorted children") {
  const NodeGraph tri = NodeGraph::from_adjacency({{1, 2}, {0, 2}, {0, 1}}, {{4, 0}, {9, 0}, {1, 0}},
                                                  Tensor::zeros({3, 0}));
  const ConfidenceMap cm = two_label({0.5, 0.5, 0.5});
  CHECK(dfs_order(tri, ChildRule::location, cm, 1).order == std::vector<std::size_t>{1, 2, 0});
  CHECK(dfs_order(tri, ChildRule::location, cm, 1).order == reference_dfs(tri, ChildRule::location, cm, 1));
}

TEST_CASE("bfs and dfs match reference traversals on random connected graphs") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 15;
    const NodeGraph g = testing::random_graph(rng, n, 0.25);
    const ConfidenceMap cm = testing::random_confidences(rng, n, 3, trial % 3 != 0);
    const std::size_t start = rng() % n;
    for (ChildRule rule : {ChildRule::location, ChildRule::confidence}) {
      CHECK(bfs_order(g, rule, cm, start).order == reference_bfs(g, rule, cm, start));
      CHECK(dfs_order(g, rule, cm, start).order == reference_dfs(g, rule, cm, start));
    }
  }
}

TEST_CASE("disconnected graphs are still fully scheduled") {
  const NodeGraph g = NodeGraph::from_adjacency({{1}, {0}, {3}, {2}}, {{0, 0}, {1, 0}, {3, 0}, {2, 0}},
                                                Tensor::zeros({4, 0}));
  const ConfidenceMap cm = two_label({0.5, 0.5, 0.5, 0.5});
  CHECK(bfs_order(g, ChildRule::location, cm, 1).order == std::vector<std::size_t>{1, 0, 3, 2});
  CHECK(dfs_order(g, ChildRule::location, cm, 2).order == std::vector<std::size_t>{2, 3, 0, 1});
}

TEST_CASE("every scheme yields a deterministic permutation") {
  std::mt19937_64 rng(1000);
  const Scheme schemes[] = {Scheme::cds, Scheme::bfs_location, Scheme::bfs_confidence, Scheme::dfs_location,
                            Scheme::dfs_confidence};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    const NodeGraph g = testing::random_graph(rng, n, 3.0 / static_cast<double>(n + 1));
    const ConfidenceMap cm = testing::random_confidences(rng, n, 2 + rng() % 6, trial % 2 == 0);
    const std::size_t start = cds_order(cm, g).order.front();
    for (Scheme s : schemes) {
      const UpdateSchedule a = make_schedule(s, cm, g);
      CHECK(is_permutation_of(a.order, n));
      CHECK(a.scheme == s);
      CHECK(a.order.front() == start);
      CHECK(make_schedule(s, cm, g) == a);
    }
  }
}

TEST_CASE("scheme names and schedule text round trip") {
  for (Scheme s : {Scheme::cds, Scheme::bfs_location, Scheme::bfs_confidence, Scheme::dfs_location,
                   Scheme::dfs_confidence})
    CHECK(parse_scheme(scheme_name(s)) == s);
  CHECK_THROWS_AS(parse_scheme("random"), ArgumentError);
  const UpdateSchedule s{{3, 0, 2, 1}, Scheme::cds};
  CHECK(schedule_text(s) == "3\n0\n2\n1\n");
  CHECK(parse_schedule_text(schedule_text(s)) == s.order);
  CHECK_THROWS_AS(parse_schedule_text("1\nx\n"), DataError);
  CHECK(is_permutation_of(std::vector<std::size_t>{}, 0));
  CHECK_FALSE(is_permutation_of(std::vector<std::size_t>{0, 0}, 2));
  CHECK_FALSE(is_permutation_of(std::vector<std::size_t>{0, 2}, 2));
}
