#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "glstm/graph.hpp"
#include "glstm/image.hpp"
#include "glstm/schedule.hpp"
#include "glstm/tensor.hpp"

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  const char* root = std::getenv("GLSTM_TEST_TMP");
  std::filesystem::path dir = std::filesystem::path(root ? root : "/tmp/glstm-tests") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline glstm::Image random_image(std::mt19937_64& rng, std::size_t w, std::size_t h, std::size_t channels) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> data(w * h * channels);
  for (double& v : data) v = u(rng);
  return glstm::Image(w, h, channels, std::move(data));
}

/// Piecewise-constant image made of a few random axis-aligned blocks plus
/// mild noise; closer to what a segmenter sees than white noise.
inline glstm::Image blocky_image(std::mt19937_64& rng, std::size_t w, std::size_t h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.02);
  glstm::Image img = glstm::Image::filled(w, h, 3, 0.5);
  for (int b = 0; b < 6; ++b) {
    const std::size_t x0 = static_cast<std::size_t>(u(rng) * w);
    const std::size_t y0 = static_cast<std::size_t>(u(rng) * h);
    const std::size_t x1 = std::min(w, x0 + 4 + static_cast<std::size_t>(u(rng) * w / 2));
    const std::size_t y1 = std::min(h, y0 + 4 + static_cast<std::size_t>(u(rng) * h / 2));
    const double c[3] = {u(rng), u(rng), u(rng)};
    for (std::size_t y = y0; y < y1; ++y)
      for (std::size_t x = x0; x < x1; ++x)
        for (std::size_t k = 0; k < 3; ++k) img.at(x, y, k) = c[k];
  }
  for (double& v : img.data) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return img;
}

/// Random connected graph: a random tree plus extra edges with probability p.
inline glstm::NodeGraph random_graph(std::mt19937_64& rng, std::size_t n, double p, std::size_t feature_dim = 0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<std::size_t>> adj(n);
  auto linked = [&](std::size_t a, std::size_t b) {
    for (std::size_t x : adj[a])
      if (x == b) return true;
    return false;
  };
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!linked(i, j) && u(rng) < p) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
  std::vector<glstm::Point2> centroids(n);
  for (auto& c : centroids) c = {std::floor(u(rng) * 8.0), std::floor(u(rng) * 8.0)};
  glstm::Tensor f = glstm::Tensor::zeros({n, feature_dim});
  for (double& v : f.data) v = u(rng) * 2.0 - 1.0;
  return glstm::NodeGraph::from_adjacency(std::move(adj), std::move(centroids), std::move(f));
}

/// Random row-stochastic [n x labels] scores, with values drawn from a
/// small set so that ties occur.
inline glstm::ConfidenceMap random_confidences(std::mt19937_64& rng, std::size_t n, std::size_t labels,
                                               bool coarse = true) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  glstm::Tensor s = glstm::Tensor::zeros({n, labels});
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (double& v : s.row(i)) {
      v = coarse ? std::floor(u(rng) * 4.0) + 1.0 : u(rng) + 1e-3;
      total += v;
    }
    for (double& v : s.row(i)) v /= total;
  }
  return glstm::ConfidenceMap{s, 0};
}

}  // namespace testing
