#include "glstm/superpixel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "glstm/errors.hpp"
#include "glstm/io.hpp"

namespace glstm {
namespace {

double srgb_to_linear(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

double lab_gradient(const kernels::LabField& lab, std::size_t x, std::size_t y) {
  const std::size_t xl = x == 0 ? x : x - 1;
  const std::size_t xr = x + 1 == lab.width ? x : x + 1;
  const std::size_t yu = y == 0 ? y : y - 1;
  const std::size_t yd = y + 1 == lab.height ? y : y + 1;
  auto sq = [&](std::size_t p, std::size_t q) {
    const double dl = lab.l[p] - lab.l[q];
    const double da = lab.a[p] - lab.a[q];
    const double db = lab.b[p] - lab.b[q];
    return dl * dl + da * da + db * db;
  };
  const std::size_t w = lab.width;
  return sq(y * w + xr, y * w + xl) + sq(yd * w + x, yu * w + x);
}

// Splits every label into 4-connected components, keeps the largest
// component of each label and merges the others into the largest adjacent
// kept region. Returns labels renumbered by first raster appearance.
std::vector<int> enforce_connectivity(std::size_t width, std::size_t height, std::span<const int> labels) {
  const std::size_t n = width * height;
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> comp(n, none);
  std::vector<std::size_t> comp_size;
  std::vector<int> comp_label;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (comp[start] != none) continue;
    const std::size_t c = comp_size.size();
    const int l = labels[start];
    comp_size.push_back(0);
    comp_label.push_back(l);
    comp[start] = c;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++comp_size[c];
      const std::size_t x = p % width;
      const std::size_t y = p / width;
      const std::array<std::size_t, 4> nbrs{x > 0 ? p - 1 : none, x + 1 < width ? p + 1 : none,
                                            y > 0 ? p - width : none, y + 1 < height ? p + width : none};
      for (std::size_t q : nbrs) {
        if (q != none && comp[q] == none && labels[q] == l) {
          comp[q] = c;
          stack.push_back(q);
        }
      }
    }
  }

  const std::size_t comps = comp_size.size();
  int max_label = 0;
  for (int l : comp_label) max_label = std::max(max_label, l);
  std::vector<std::size_t> keeper(static_cast<std::size_t>(max_label) + 1, none);
  for (std::size_t c = 0; c < comps; ++c) {
    std::size_t& k = keeper[static_cast<std::size_t>(comp_label[c])];
    if (k == none || comp_size[c] > comp_size[k]) k = c;
  }

  std::vector<std::set<std::size_t>> adjacent(comps);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t p = y * width + x;
      if (x + 1 < width && comp[p] != comp[p + 1]) {
        adjacent[comp[p]].insert(comp[p + 1]);
        adjacent[comp[p + 1]].insert(comp[p]);
      }
      if (y + 1 < height && comp[p] != comp[p + width]) {
        adjacent[comp[p]].insert(comp[p + width]);
        adjacent[comp[p + width]].insert(comp[p]);
      }
    }
  }

  // owner[c]: kept component that absorbs c. region_size tracks merged sizes.
  std::vector<std::size_t> owner(comps, none);
  std::vector<std::size_t> region_size(comps, 0);
  std::size_t pending = 0;
  for (std::size_t c = 0; c < comps; ++c) {
    if (keeper[static_cast<std::size_t>(comp_label[c])] == c) {
      owner[c] = c;
      region_size[c] = comp_size[c];
    } else {
      ++pending;
    }
  }
  while (pending > 0) {
    const std::size_t before = pending;
    for (std::size_t c = 0; c < comps; ++c) {
      if (owner[c] != none) continue;
      std::size_t best = none;
      for (std::size_t a : adjacent[c]) {
        const std::size_t o = owner[a];
        if (o == none) continue;
        if (best == none || region_size[o] > region_size[best] ||
            (region_size[o] == region_size[best] && comp_label[o] < comp_label[best])) {
          best = o;
        }
      }
      if (best == none) continue;
      owner[c] = best;
      region_size[best] += comp_size[c];
      --pending;
    }
    if (pending == before) throw ContractError("connectivity repair made no progress");
  }

  std::vector<int> relabel(comps, -1);
  std::vector<int> out(n);
  int next = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t o = owner[comp[p]];
    if (relabel[o] < 0) relabel[o] = next++;
    out[p] = relabel[o];
  }
  return out;
}

}  // namespace

SuperpixelMap SuperpixelMap::from_labels(std::size_t width, std::size_t height, std::vector<int> labels) {
  if (labels.size() != width * height || labels.empty()) {
    throw DimensionError("label map size does not match its dimensions");
  }
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) throw ArgumentError("negative region label");
    max_label = std::max(max_label, l);
  }
  const auto regions = static_cast<std::size_t>(max_label) + 1;
  SuperpixelMap sp;
  sp.width = width;
  sp.height = height;
  auto groups = std::make_shared<Segments>(Segments::from_labels(labels, regions));
  sp.centroids.resize(regions);
  for (std::size_t r = 0; r < regions; ++r) {
    const auto members = groups->group(r);
    if (members.empty()) throw ArgumentError(fmt::format("region {} has no pixels", r));
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t p : members) {
      sx += static_cast<double>(p % width);
      sy += static_cast<double>(p / width);
    }
    const auto n = static_cast<double>(members.size());
    sp.centroids[r] = {sx / n, sy / n};
  }
  sp.labels = std::move(labels);
  sp.regions = std::move(groups);
  return sp;
}

kernels::LabField to_lab(const Image& img) {
  kernels::LabField lab;
  lab.width = img.width;
  lab.height = img.height;
  const std::size_t n = img.pixel_count();
  lab.l.resize(n);
  lab.a.assign(n, 0.0);
  lab.b.assign(n, 0.0);
  if (img.channels == 1) {
    for (std::size_t p = 0; p < n; ++p) lab.l[p] = 100.0 * img.data[p];
    return lab;
  }
  // sRGB (D65) -> XYZ -> CIELAB
  constexpr double xn = 0.95047;
  constexpr double yn = 1.0;
  constexpr double zn = 1.08883;
  for (std::size_t p = 0; p < n; ++p) {
    const double r = srgb_to_linear(img.data[3 * p]);
    const double g = srgb_to_linear(img.data[3 * p + 1]);
    const double b = srgb_to_linear(img.data[3 * p + 2]);
    const double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double fx = lab_f(X / xn);
    const double fy = lab_f(Y / yn);
    const double fz = lab_f(Z / zn);
    lab.l[p] = 116.0 * fy - 16.0;
    lab.a[p] = 500.0 * (fx - fy);
    lab.b[p] = 200.0 * (fy - fz);
  }
  return lab;
}

SuperpixelMap slic(const Image& img, const SlicParams& params, Backend backend) {
  const std::size_t w = img.width;
  const std::size_t h = img.height;
  const std::size_t n = w * h;
  if (params.k == 0 || params.k > n) {
    throw ArgumentError(fmt::format("superpixel count {} must lie in [1, {}]", params.k, n));
  }
  if (!(params.compactness > 0.0)) throw ArgumentError("compactness must be positive");
  if (params.iterations < 0) throw ArgumentError("iteration count must be non-negative");

  const kernels::LabField lab = to_lab(img);
  const double step = std::sqrt(static_cast<double>(n) / static_cast<double>(params.k));
  const std::size_t nx =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(static_cast<double>(w) / step)), 1, w);
  const std::size_t ny =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(static_cast<double>(h) / step)), 1, h);
  const double cell_w = static_cast<double>(w) / static_cast<double>(nx);
  const double cell_h = static_cast<double>(h) / static_cast<double>(ny);

  // Grid seeds, each moved to the lowest-gradient pixel of its 3x3 window.
  std::vector<kernels::SlicCenter> centers;
  centers.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      auto cx = static_cast<std::size_t>((static_cast<double>(i) + 0.5) * cell_w);
      auto cy = static_cast<std::size_t>((static_cast<double>(j) + 0.5) * cell_h);
      double best = lab_gradient(lab, cx, cy);
      std::size_t bx = cx;
      std::size_t by = cy;
      for (std::size_t y = cy > 0 ? cy - 1 : 0; y <= std::min(cy + 1, h - 1); ++y) {
        for (std::size_t x = cx > 0 ? cx - 1 : 0; x <= std::min(cx + 1, w - 1); ++x) {
          const double g = lab_gradient(lab, x, y);
          if (g < best) {
            best = g;
            bx = x;
            by = y;
          }
        }
      }
      const std::size_t p = by * w + bx;
      centers.push_back({lab.l[p], lab.a[p], lab.b[p], static_cast<double>(bx), static_cast<double>(by)});
    }
  }

  std::vector<int> labels(n);
  for (std::size_t y = 0; y < h; ++y) {
    const auto gy = std::min(ny - 1, static_cast<std::size_t>(static_cast<double>(y) / cell_h));
    for (std::size_t x = 0; x < w; ++x) {
      const auto gx = std::min(nx - 1, static_cast<std::size_t>(static_cast<double>(x) / cell_w));
      labels[y * w + x] = static_cast<int>(gy * nx + gx);
    }
  }

  for (int it = 0; it < params.iterations; ++it) {
    kernels::slic_assign(backend, lab, centers, step, params.compactness, labels);
    kernels::slic_update(backend, lab, labels, centers);
  }

  return SuperpixelMap::from_labels(w, h, enforce_connectivity(w, h, labels));
}

Tensor pool_features(const Tensor& field, const SuperpixelMap& sp, Backend backend) {
  if (field.rank() != 2 || field.shape[0] != sp.pixel_count()) {
    throw ArgumentError(fmt::format("feature field {} does not match a {}x{} superpixel map",
                                    shape_string(field.shape), sp.height, sp.width));
  }
  Tensor out = Tensor::zeros({sp.region_count(), field.shape[1]});
  kernels::segment_mean(backend, field.data, field.shape[1], *sp.regions, out.data);
  return out;
}

Var pool_features(Tape& tape, Var field, const SuperpixelMap& sp) {
  const Tensor& f = tape.value(field);
  if (f.rank() != 2 || f.shape[0] != sp.pixel_count()) {
    throw ArgumentError(fmt::format("feature field {} does not match a {}x{} superpixel map",
                                    shape_string(f.shape), sp.height, sp.width));
  }
  return tape.segment_mean(field, sp.regions);
}

std::vector<int> majority_labels(const SuperpixelMap& sp, std::span<const int> gt) {
  if (gt.size() != sp.pixel_count()) throw ArgumentError("ground truth does not match the superpixel map");
  int max_label = 0;
  for (int g : gt) {
    if (g < 0) throw DataError("negative ground-truth label");
    max_label = std::max(max_label, g);
  }
  const auto classes = static_cast<std::size_t>(max_label) + 1;
  std::vector<int> out(sp.region_count());
  std::vector<std::size_t> hist(classes);
  for (std::size_t r = 0; r < sp.region_count(); ++r) {
    std::fill(hist.begin(), hist.end(), 0);
    for (std::size_t p : sp.pixels_of(r)) ++hist[static_cast<std::size_t>(gt[p])];
    // max_element returns the first maximum, i.e. the smaller label.
    out[r] = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  }
  return out;
}

double quantization_oracle(const SuperpixelMap& sp, std::span<const int> gt) {
  const std::vector<int> major = majority_labels(sp, gt);
  std::size_t correct = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (gt[p] == major[static_cast<std::size_t>(sp.labels[p])]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gt.size());
}

bool regions_four_connected(const SuperpixelMap& sp) {
  const std::size_t w = sp.width;
  const std::size_t h = sp.height;
  std::vector<char> seen(sp.pixel_count(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t r = 0; r < sp.region_count(); ++r) {
    const auto members = sp.pixels_of(r);
    if (members.empty()) return false;
    const int l = static_cast<int>(r);
    std::size_t reached = 0;
    stack.push_back(members.front());
    seen[members.front()] = 1;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++reached;
      const std::size_t x = p % w;
      const std::size_t y = p / w;
      auto visit = [&](std::size_t q) {
        if (!seen[q] && sp.labels[q] == l) {
          seen[q] = 1;
          stack.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    if (reached != members.size()) return false;
  }
  return true;
}

Tensor upsample_bilinear(const Tensor& field, std::size_t out_h, std::size_t out_w) {
  if (field.rank() != 3 || out_h == 0 || out_w == 0) throw ArgumentError("upsample_bilinear expects [h x w x d]");
  const std::size_t h = field.shape[0];
  const std::size_t w = field.shape[1];
  const std::size_t d = field.shape[2];
  Tensor out = Tensor::zeros({out_h, out_w, d});
  auto source = [](std::size_t o, std::size_t in, std::size_t out) {
    const double s = (static_cast<double>(o) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(in - 1));
  };
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const double sy = source(oy, h, out_h);
    const auto y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double sx = source(ox, w, out_w);
      const auto x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - static_cast<double>(x0);
      for (std::size_t c = 0; c < d; ++c) {
        auto at = [&](std::size_t y, std::size_t x) { return field.data[(y * w + x) * d + c]; };
        const double top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
        const double bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
        out.data[(oy * out_w + ox) * d + c] = top * (1.0 - fy) + bottom * fy;
      }
    }
  }
  return out;
}

std::string encode_superpixel_map(const SuperpixelMap& sp) {
  std::string out = fmt::format("SPMAP\n{} {}\n{}\n", sp.width, sp.height, sp.region_count());
  out.reserve(out.size() + 4 * sp.labels.size());
  for (int l : sp.labels) put_u32(out, static_cast<std::uint32_t>(l));
  return out;
}

SuperpixelMap decode_superpixel_map(std::string_view bytes) {
  constexpr std::string_view magic = "SPMAP\n";
  if (bytes.substr(0, magic.size()) != magic) throw DataError("not a superpixel map");
  std::size_t pos = magic.size();
  auto number = [&]() {
    std::size_t v = 0;
    bool any = false;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + static_cast<std::size_t>(bytes[pos++] - '0');
      any = true;
    }
    if (!any || pos >= bytes.size()) throw DataError("malformed superpixel map header");
    ++pos;  // separator
    return v;
  };
  const std::size_t w = number();
  const std::size_t h = number();
  const std::size_t regions = number();
  ByteReader in(bytes.substr(pos));
  std::vector<int> labels(w * h);
  for (int& l : labels) l = static_cast<int>(in.u32());
  if (!in.done()) throw DataError("trailing bytes after superpixel map");
  SuperpixelMap sp = SuperpixelMap::from_labels(w, h, std::move(labels));
  if (sp.region_count() != regions) throw DataError("superpixel map region count mismatch");
  return sp;
}

void write_superpixel_map(const std::filesystem::path& path, const SuperpixelMap& sp) {
  write_file_atomic(path, encode_superpixel_map(sp));
}

SuperpixelMap read_superpixel_map(const std::filesystem::path& path) {
  return decode_superpixel_map(read_file(path));
}

Image boundary_overlay(const Image& img, const SuperpixelMap& sp) {
  if (img.width != sp.width || img.height != sp.height) throw ArgumentError("overlay dimensions differ");
  Image out = Image::filled(img.width, img.height, 3, 0.0);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const std::size_t p = y * img.width + x;
      const bool edge = (x + 1 < img.width && sp.labels[p] != sp.labels[p + 1]) ||
                        (y + 1 < img.height && sp.labels[p] != sp.labels[p + img.width]);
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = img.at(x, y, img.channels == 3 ? c : 0);
        out.at(x, y, c) = edge ? (c == 0 ? 1.0 : 0.0) : v;
      }
    }
  }
  return out;
}

}  // namespace glstm
