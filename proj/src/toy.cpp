#include "glstm/toy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "glstm/errors.hpp"

namespace glstm {
namespace {

// Base RGB colour per label slot: background, then the six body parts.
// Upper and lower segments of a limb share a colour, so only their place in
// the figure tells them apart.
constexpr std::array<std::array<double, 3>, 7> kPalette{{
    {0.40, 0.55, 0.40},  // background
    {0.95, 0.80, 0.65},  // head
    {0.20, 0.35, 0.80},  // torso
    {0.85, 0.35, 0.25},  // upper arm
    {0.85, 0.35, 0.25},  // lower arm
    {0.50, 0.28, 0.65},  // upper leg
    {0.50, 0.28, 0.65},  // lower leg
}};

Point2 along(Point2 p, double angle, double length) {
  // angle 0 points down (+y); positive angles turn towards +x.
  return {p.x + std::sin(angle) * length, p.y + std::cos(angle) * length};
}

}  // namespace

bool Disc::contains(double x, double y) const noexcept {
  const double dx = x - center.x;
  const double dy = y - center.y;
  return dx * dx + dy * dy <= radius * radius;
}

double Disc::area() const noexcept { return std::numbers::pi * radius * radius; }

bool Bar::contains(double x, double y) const noexcept {
  const double ux = b.x - a.x;
  const double uy = b.y - a.y;
  const double len = std::hypot(ux, uy);
  if (len == 0.0) return false;
  const double px = x - a.x;
  const double py = y - a.y;
  const double t = (px * ux + py * uy) / len;
  const double perp = (px * uy - py * ux) / len;
  return t >= 0.0 && t <= len && std::abs(perp) <= half_width;
}

double Bar::area() const noexcept { return std::hypot(b.x - a.x, b.y - a.y) * 2.0 * half_width; }

int part_label(BodyPart part, int parts) noexcept {
  return std::min(static_cast<int>(part), parts - 1) + 1;
}

ToyFigure sample_figure(std::mt19937_64& rng, const ToyConfig& cfg) {
  if (cfg.width < 32 || cfg.height < 32) throw ArgumentError("toy images must be at least 32x32");
  if (cfg.parts < 1 || cfg.parts > static_cast<int>(kBodyPartCount)) {
    throw ArgumentError(fmt::format("toy figures have 1..{} part labels", kBodyPartCount));
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double base = static_cast<double>(std::min(cfg.width, cfg.height)) / 64.0;

  for (int attempt = 0; attempt < 100; ++attempt) {
    ToyFigure fig;
    fig.brightness = 1.0 + range(-cfg.brightness_jitter, cfg.brightness_jitter);
    const double s = base * range(0.8, 1.0);
    const double tilt = range(-0.2, 0.2);
    const Point2 neck{0.0, 0.0};
    const Point2 hip = along(neck, tilt, 18.0 * s);
    const double side_x = std::cos(tilt);
    const double side_y = -std::sin(tilt);

    auto bar = [&](BodyPart part, Point2 a, Point2 b, double hw) {
      fig.shapes.push_back({part, false, {}, Bar{a, b, hw}});
    };
    auto limb = [&](BodyPart upper, BodyPart lower, Point2 root, double angle, double bend, double l1, double l2,
                    double w1, double w2) {
      const Point2 joint = along(root, angle, l1);
      // Segments overrun the joint slightly so the bend leaves no gap.
      bar(upper, root, along(joint, angle, w2 * 0.5), w1);
      bar(lower, joint, along(joint, angle + bend, l2), w2);
    };

    for (double side : {-1.0, 1.0}) {
      const Point2 root{hip.x + side * side_x * 3.5 * s, hip.y + side * side_y * 3.5 * s};
      limb(BodyPart::upper_leg, BodyPart::lower_leg, root, tilt + side * range(0.0, 0.5), range(-0.45, 0.45),
           12.0 * s, 12.0 * s, 3.3 * s, 2.9 * s);
    }
    bar(BodyPart::torso, neck, hip, 6.5 * s);
    for (double side : {-1.0, 1.0}) {
      const Point2 shoulder = along({neck.x + side * side_x * 5.0 * s, neck.y + side * side_y * 5.0 * s}, tilt,
                                    2.0 * s);
      limb(BodyPart::upper_arm, BodyPart::lower_arm, shoulder, tilt + side * range(0.3, 1.8), side * range(-1.0, 1.0),
           11.0 * s, 11.0 * s, 2.8 * s, 2.5 * s);
    }
    const Point2 head_center = along(neck, tilt + std::numbers::pi, 5.5 * s);
    fig.shapes.push_back({BodyPart::head, true, Disc{head_center, 6.0 * s}, {}});

    // Bounding box of the posed figure; it is then shifted to a uniformly
    // drawn spot that keeps a one-pixel margin on every side.
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& shape : fig.shapes) {
      if (shape.is_disc) {
        x0 = std::min(x0, shape.disc.center.x - shape.disc.radius);
        x1 = std::max(x1, shape.disc.center.x + shape.disc.radius);
        y0 = std::min(y0, shape.disc.center.y - shape.disc.radius);
        y1 = std::max(y1, shape.disc.center.y + shape.disc.radius);
      } else {
        const double r = shape.bar.half_width;
        x0 = std::min({x0, shape.bar.a.x - r, shape.bar.b.x - r});
        x1 = std::max({x1, shape.bar.a.x + r, shape.bar.b.x + r});
        y0 = std::min({y0, shape.bar.a.y - r, shape.bar.b.y - r});
        y1 = std::max({y1, shape.bar.a.y + r, shape.bar.b.y + r});
      }
    }
    const double slack_x = static_cast<double>(cfg.width) - 2.0 - (x1 - x0);
    const double slack_y = static_cast<double>(cfg.height) - 2.0 - (y1 - y0);
    const bool fits = slack_x >= 0.0 && slack_y >= 0.0;
    if (fits) {
      const double dx = 1.0 - x0 + range(0.0, slack_x);
      const double dy = 1.0 - y0 + range(0.0, slack_y);
      for (auto& shape : fig.shapes) {
        for (Point2* p : {&shape.disc.center, &shape.bar.a, &shape.bar.b}) {
          p->x += dx;
          p->y += dy;
        }
      }
    }
    if (fits) return fig;
  }
  throw DataError("could not place a toy figure inside the canvas after 100 attempts");
}

ToySample render_figure(const ToyFigure& fig, const ToyConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, cfg.noise);
  ToySample sample;
  sample.gt.assign(cfg.width * cfg.height, 0);
  std::vector<double> data(cfg.width * cfg.height * 3);
  for (std::size_t y = 0; y < cfg.height; ++y) {
    for (std::size_t x = 0; x < cfg.width; ++x) {
      const double px = static_cast<double>(x) + 0.5;
      const double py = static_cast<double>(y) + 0.5;
      std::size_t slot = 0;
      int label = 0;
      for (const auto& shape : fig.shapes) {
        if (shape.contains(px, py)) {
          slot = static_cast<std::size_t>(shape.part) + 1;
          label = part_label(shape.part, cfg.parts);
        }
      }
      const std::size_t p = y * cfg.width + x;
      sample.gt[p] = label;
      const double gain = slot == 0 ? 1.0 : fig.brightness;
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = kPalette[slot][c] * gain + (cfg.noise > 0.0 ? noise(rng) : 0.0);
        data[3 * p + c] = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
      }
    }
  }
  sample.image = Image(cfg.width, cfg.height, 3, std::move(data));
  return sample;
}

std::vector<ToySample> gen_toy(std::uint64_t seed, std::size_t n, const ToyConfig& cfg) {
  std::vector<ToySample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i), 0x70797531u};
    std::mt19937_64 rng(seq);
    const ToyFigure fig = sample_figure(rng, cfg);
    ToySample s = render_figure(fig, cfg, rng);
    s.seed = seed;
    out.push_back(std::move(s));
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const std::vector<ToySample>& samples) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    write_pnm(dir / fmt::format("{:04}.ppm", i), samples[i].image);
    write_label_pgm(dir / fmt::format("{:04}_gt.pgm", i), samples[i].image.width, samples[i].image.height,
                    samples[i].gt);
  }
}

std::vector<ToySample> read_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("dataset directory " + dir.string() + " not found");
  std::vector<std::filesystem::path> images;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".ppm") images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end());
  std::vector<ToySample> out;
  for (const auto& path : images) {
    std::filesystem::path gt_path = path;
    gt_path.replace_filename(path.stem().string() + "_gt.pgm");
    ToySample s;
    s.image = read_pnm(path);
    std::size_t w = 0;
    std::size_t h = 0;
    s.gt = read_label_pgm(gt_path, w, h);
    if (w != s.image.width || h != s.image.height) throw DataError("label map size differs for " + path.string());
    out.push_back(std::move(s));
  }
  if (out.empty()) throw DataError("no samples in " + dir.string());
  return out;
}

}  // namespace glstm
