#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "glstm/errors.hpp"
#include "glstm/image.hpp"
#include "glstm/io.hpp"
#include "glstm/superpixel.hpp"
#include "glstm/tape.hpp"
#include "support.hpp"

using namespace glstm;

namespace {

// Independent flood-fill count of 4-connected components per label.
std::size_t component_count(const SuperpixelMap& sp, int label) {
  std::vector<char> seen(sp.pixel_count(), 0);
  std::size_t comps = 0;
  for (std::size_t start = 0; start < sp.pixel_count(); ++start) {
    if (seen[start] || sp.labels[start] != label) continue;
    ++comps;
    std::vector<std::size_t> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const std::size_t x = p % sp.width, y = p / sp.width;
      const std::size_t cand[4] = {x > 0 ? p - 1 : p, x + 1 < sp.width ? p + 1 : p, y > 0 ? p - sp.width : p,
                                   y + 1 < sp.height ? p + sp.width : p};
      for (std::size_t q : cand) {
        if (!seen[q] && sp.labels[q] == label) {
          seen[q] = 1;
          stack.push_back(q);
        }
      }
    }
  }
  return comps;
}

void check_partition(const SuperpixelMap& sp) {
  const std::size_t r = sp.region_count();
  REQUIRE(sp.labels.size() == sp.pixel_count());
  std::vector<std::size_t> sizes(r, 0);
  for (int l : sp.labels) {
    REQUIRE(l >= 0);
    REQUIRE(static_cast<std::size_t>(l) < r);
    ++sizes[static_cast<std::size_t>(l)];
  }
  for (std::size_t i = 0; i < r; ++i) {
    CHECK(sizes[i] > 0);
    CHECK(sp.pixels_of(i).size() == sizes[i]);
    CHECK(sp.centroids[i].x >= 0.0);
    CHECK(sp.centroids[i].x <= static_cast<double>(sp.width - 1));
    CHECK(sp.centroids[i].y >= 0.0);
    CHECK(sp.centroids[i].y <= static_cast<double>(sp.height - 1));
  }
}

SuperpixelMap grid_map(std::size_t w, std::size_t h, std::size_t cell) {
  std::vector<int> labels(w * h);
  const std::size_t cols = (w + cell - 1) / cell;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) labels[y * w + x] = static_cast<int>((y / cell) * cols + x / cell);
  return SuperpixelMap::from_labels(w, h, labels);
}

}  // namespace

TEST_CASE("image validation and PNM round trip") {
  CHECK_THROWS_AS(Image(2, 1, 1, {0.5, 1.5}), ArgumentError);
  CHECK_THROWS_AS(Image(2, 1, 2, {0.5, 0.5, 0.5, 0.5}), ArgumentError);
  const auto dir = testing::temp_dir("superpixel-pnm");
  std::mt19937_64 rng(1);
  Image img = testing::random_image(rng, 7, 5, 3);
  for (double& v : img.data) v = std::round(v * 255.0) / 255.0;
  write_pnm(dir / "a.ppm", img);
  const Image back = read_pnm(dir / "a.ppm");
  CHECK(back.width == 7);
  CHECK(back.channels == 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));
  write_file_atomic(dir / "bad.ppm", "P3\n1 1\n255\n0 0 0\n");
  CHECK_THROWS_AS(read_pnm(dir / "bad.ppm"), DataError);
  CHECK_THROWS_AS(read_pnm(dir / "missing.ppm"), DataError);
  const std::vector<int> labels{0, 3, 6, 1};
  write_label_pgm(dir / "l.pgm", 2, 2, labels);
  std::size_t w = 0, h = 0;
  CHECK(read_label_pgm(dir / "l.pgm", w, h) == labels);
}

TEST_CASE("CIELAB conversion of reference colours") {
  const kernels::LabField white = to_lab(Image::filled(1, 1, 3, 1.0));
  CHECK(white.l[0] == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(std::abs(white.a[0]) < 1e-3);
  CHECK(std::abs(white.b[0]) < 1e-3);
  const kernels::LabField black = to_lab(Image::filled(1, 1, 3, 0.0));
  CHECK(black.l[0] == doctest::Approx(0.0));
  // Pure red: L 53.24, a 80.09, b 67.20 (standard D65 values).
  const kernels::LabField red = to_lab(Image(1, 1, 3, {1.0, 0.0, 0.0}));
  CHECK(red.l[0] == doctest::Approx(53.24).epsilon(1e-3));
  CHECK(red.a[0] == doctest::Approx(80.09).epsilon(1e-3));
  CHECK(red.b[0] == doctest::Approx(67.20).epsilon(1e-3));
  const kernels::LabField grey = to_lab(Image(1, 1, 1, {0.25}));
  CHECK(grey.l[0] == 25.0);
  CHECK(grey.a[0] == 0.0);
}

TEST_CASE("slic argument errors") {
  const Image img = Image::filled(4, 4, 1, 0.5);
  CHECK_THROWS_AS(slic(img, {0, 10.0, 10, 0}), ArgumentError);
  CHECK_THROWS_AS(slic(img, {17, 10.0, 10, 0}), ArgumentError);
  CHECK_THROWS_AS(slic(img, {4, 0.0, 10, 0}), ArgumentError);
  CHECK_NOTHROW(slic(img, {16, 10.0, 10, 0}));
}

TEST_CASE("uniform grey image gives a regular 4x4 grid") {
  const SuperpixelMap sp = slic(Image::filled(64, 64, 1, 0.5), {16, 10.0, 10, 0});
  REQUIRE(sp.region_count() == 16);
  check_partition(sp);
  for (std::size_t r = 0; r < 16; ++r) {
    std::size_t x0 = 64, x1 = 0, y0 = 64, y1 = 0;
    for (std::size_t p : sp.pixels_of(r)) {
      x0 = std::min(x0, p % 64);
      x1 = std::max(x1, p % 64);
      y0 = std::min(y0, p / 64);
      y1 = std::max(y1, p / 64);
    }
    // Nearest grid cell by the box's top-left corner.
    const double cx = std::round(static_cast<double>(x0) / 16.0) * 16.0;
    const double cy = std::round(static_cast<double>(y0) / 16.0) * 16.0;
    CHECK(std::abs(static_cast<double>(x0) - cx) <= 2.0);
    CHECK(std::abs(static_cast<double>(y0) - cy) <= 2.0);
    CHECK(std::abs(static_cast<double>(x1) - (cx + 15.0)) <= 2.0);
    CHECK(std::abs(static_cast<double>(y1) - (cy + 15.0)) <= 2.0);
  }
}

TEST_CASE("k = 1 gives one region") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 5; ++i) {
    const SuperpixelMap sp = slic(testing::random_image(rng, 13 + i, 9, 3), {1, 10.0, 10, 0});
    CHECK(sp.region_count() == 1);
    CHECK(sp.pixels_of(0).size() == sp.pixel_count());
  }
}

TEST_CASE("two-tone split: regions do not reach across the boundary further than the search window") {
  const std::size_t w = 48, h = 32, k = 8;
  Image img = Image::filled(w, h, 3, 0.1);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = w / 2; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(x, y, c) = 0.9;
  const SuperpixelMap sp = slic(img, {k, 10.0, 10, 0});
  const double step = std::sqrt(static_cast<double>(w * h) / static_cast<double>(k));
  for (std::size_t r = 0; r < sp.region_count(); ++r) {
    std::size_t left = 0, right = 0;
    for (std::size_t p : sp.pixels_of(r)) (p % w < w / 2 ? left : right)++;
    const bool majority_left = left >= right;
    for (std::size_t p : sp.pixels_of(r)) {
      const double x = static_cast<double>(p % w);
      const bool is_left = p % w < w / 2;
      if (is_left != majority_left) CHECK(std::abs(x - (static_cast<double>(w) / 2.0 - 0.5)) <= step);
    }
  }
}

TEST_CASE("property: partition, 4-connectivity and determinism on random images") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t w = 8 + rng() % 25, h = 8 + rng() % 25;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(60, w * h);
    const Image img = i % 3 == 0 ? testing::blocky_image(rng, w, h) : testing::random_image(rng, w, h, 1 + 2 * (i % 2));
    const SlicParams p{k, 5.0 + static_cast<double>(i % 4) * 10.0, 1 + i % 10, 0};
    const SuperpixelMap sp = slic(img, p);
    check_partition(sp);
    CHECK(regions_four_connected(sp));
    if (i % 50 == 0) {
      for (std::size_t r = 0; r < sp.region_count(); ++r) CHECK(component_count(sp, static_cast<int>(r)) == 1);
      CHECK(slic(img, p) == sp);
      CHECK(slic(img, p, Backend::serial) == sp);
    }
  }
}

TEST_CASE("regions_four_connected detects a split region") {
  const SuperpixelMap sp = SuperpixelMap::from_labels(3, 1, {0, 1, 0});
  CHECK_FALSE(regions_four_connected(sp));
  CHECK(regions_four_connected(SuperpixelMap::from_labels(3, 1, {0, 0, 1})));
  CHECK_THROWS_AS(SuperpixelMap::from_labels(3, 1, {0, 2, 0}), ArgumentError);
  CHECK_THROWS_AS(SuperpixelMap::from_labels(3, 1, {0, 0}), DimensionError);
}

TEST_CASE("pool_features examples") {
  const SuperpixelMap sp = SuperpixelMap::from_labels(3, 1, {0, 0, 1});
  const Tensor f = Tensor::matrix(3, 2, {0, 2, 4, 6, 7, 8});
  const Tensor pooled = pool_features(f, sp);
  CHECK(pooled == Tensor::matrix(2, 2, {2, 4, 7, 8}));
  CHECK(pool_features(f, sp, Backend::serial) == pooled);
  const Tensor c = Tensor::filled({3, 2}, 0.7);
  CHECK(pool_features(c, sp) == Tensor::filled({2, 2}, 0.7));
  CHECK_THROWS_AS(pool_features(Tensor::zeros({4, 2}), sp), ArgumentError);

  Tape t;
  const Var x = t.variable(f);
  const Var y = pool_features(t, x, sp);
  CHECK(t.value(y) == pooled);
  t.backward(t.sum(y));
  CHECK(t.grad(x) == Tensor::matrix(3, 2, {0.5, 0.5, 0.5, 0.5, 1.0, 1.0}));
}

TEST_CASE("majority labels and the quantization oracle") {
  const SuperpixelMap sp = SuperpixelMap::from_labels(4, 1, {0, 0, 1, 1});
  CHECK(quantization_oracle(sp, std::vector<int>{2, 2, 2, 2}) == 1.0);
  CHECK(majority_labels(sp, std::vector<int>{3, 1, 0, 0}) == std::vector<int>{1, 0});
  CHECK(quantization_oracle(sp, std::vector<int>{3, 1, 0, 0}) == 0.75);

  std::mt19937_64 rng(8);
  const SuperpixelMap quad = grid_map(8, 8, 4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> gt(64);
    for (int& g : gt) g = static_cast<int>(rng() % 3);
    // Exhaustive: best label per region by count.
    std::size_t best_total = 0;
    for (std::size_t r = 0; r < 4; ++r) {
      std::size_t best = 0;
      for (int l = 0; l < 3; ++l) {
        std::size_t n = 0;
        for (std::size_t p : quad.pixels_of(r)) n += gt[p] == l;
        best = std::max(best, n);
      }
      best_total += best;
    }
    const double oracle = quantization_oracle(quad, gt);
    CHECK(oracle == doctest::Approx(static_cast<double>(best_total) / 64.0).epsilon(1e-15));
    // No region-constant labelling beats it.
    std::vector<int> labelling(4);
    for (int& l : labelling) l = static_cast<int>(rng() % 3);
    std::size_t correct = 0;
    for (std::size_t p = 0; p < 64; ++p) correct += gt[p] == labelling[static_cast<std::size_t>(quad.labels[p])];
    CHECK(static_cast<double>(correct) / 64.0 <= oracle);
  }
}

TEST_CASE("superpixel map file round trip") {
  std::mt19937_64 rng(6);
  const SuperpixelMap sp = slic(testing::blocky_image(rng, 20, 12), {10, 10.0, 10, 0});
  const std::string bytes = encode_superpixel_map(sp);
  CHECK(bytes.rfind("SPMAP\n20 12\n", 0) == 0);
  CHECK(decode_superpixel_map(bytes) == sp);
  CHECK_THROWS_AS(decode_superpixel_map("P5\n"), DataError);
  CHECK_THROWS_AS(decode_superpixel_map(bytes.substr(0, bytes.size() - 1)), DataError);
  const auto dir = testing::temp_dir("superpixel-spmap");
  write_superpixel_map(dir / "m.spmap", sp);
  CHECK(read_superpixel_map(dir / "m.spmap") == sp);
}

TEST_CASE("bilinear upsampling") {
  Tensor same = Tensor::zeros({2, 3, 1});
  for (std::size_t i = 0; i < 6; ++i) same.data[i] = static_cast<double>(i);
  CHECK(upsample_bilinear(same, 2, 3) == same);
  CHECK(upsample_bilinear(Tensor::filled({2, 2, 3}, 0.3), 5, 7) == Tensor::filled({5, 7, 3}, 0.3));
  // 1x2 -> 1x4 with centre sampling: sources -0.25, 0.25, 0.75, 1.25 clamp to [0, 1].
  const Tensor row({1, 2, 1}, {0.0, 4.0});
  const Tensor up = upsample_bilinear(row, 1, 4);
  CHECK(up.data == std::vector<double>{0.0, 1.0, 3.0, 4.0});
  CHECK_THROWS_AS(upsample_bilinear(Tensor::zeros({2, 2}), 4, 4), ArgumentError);
}

TEST_CASE("boundary overlay marks region borders only") {
  const Image img = Image::filled(4, 1, 1, 0.5);
  const SuperpixelMap sp = SuperpixelMap::from_labels(4, 1, {0, 0, 1, 1});
  const Image ov = boundary_overlay(img, sp);
  CHECK(ov.channels == 3);
  CHECK(ov.at(0, 0, 0) == 0.5);
  CHECK(ov.at(3, 0, 1) == 0.5);
  const bool marked = (ov.at(1, 0, 0) == 1.0 && ov.at(1, 0, 1) == 0.0) || (ov.at(2, 0, 0) == 1.0 && ov.at(2, 0, 1) == 0.0);
  CHECK(marked);
}
