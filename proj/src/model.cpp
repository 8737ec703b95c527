#include "glstm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <fmt/format.h>

#include "glstm/errors.hpp"

namespace glstm {
namespace {

constexpr double kGaussianInitStd = 0.001;

std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::mt19937_64 keyed_rng(std::uint64_t seed, std::string_view key) {
  const std::uint64_t k = fnv1a(key);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  return std::mt19937_64(seq);
}

void add_gaussian(ParamStore& store, std::uint64_t seed, const std::string& name, std::size_t rows,
                  std::size_t cols) {
  auto rng = keyed_rng(seed, name);
  std::normal_distribution<double> normal(0.0, kGaussianInitStd);
  Tensor w = Tensor::zeros({rows, cols});
  for (double& v : w.data) v = normal(rng);
  store.add(name, std::move(w), true);
}

int row_argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return static_cast<int>(best);
}

Var bind(Tape& tape, const ParamStore& store, std::string_view name) {
  return tape.param(store, store.index_of(name));
}

}  // namespace

std::string_view head_mode_name(HeadMode m) noexcept { return m == HeadMode::node ? "node" : "pixel"; }

HeadMode parse_head_mode(std::string_view name) {
  if (name == "node") return HeadMode::node;
  if (name == "pixel") return HeadMode::pixel;
  throw ArgumentError(fmt::format("unknown head mode '{}'", name));
}

void ParserConfig::validate() const {
  if (dim < 1) throw ArgumentError("dim must be at least 1");
  if (layers < 0) throw ArgumentError("layers must be non-negative");
  if (labels < 2) throw ArgumentError("at least two labels are required");
  if (background < 0 || static_cast<std::size_t>(background) >= labels) {
    throw ArgumentError(fmt::format("background label {} outside [0, {})", background, labels));
  }
  if (superpixels < 1) throw ArgumentError("superpixels must be at least 1");
  if (!(compactness > 0.0)) throw ArgumentError("compactness must be positive");
  if (slic_iterations < 1) throw ArgumentError("slic_iterations must be at least 1");
  if (focus_label && (*focus_label < 0 || static_cast<std::size_t>(*focus_label) >= labels)) {
    throw ArgumentError(fmt::format("focus label {} outside [0, {})", *focus_label, labels));
  }
}

ParamStore make_parser_params(const ParserConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamStore store;
  add_gaussian(store, seed, "frontend.W", cfg.dim, kPixelInputs);
  store.add("frontend.b", Tensor::zeros({cfg.dim}), false);
  add_gaussian(store, seed, "head.W", cfg.labels, cfg.dim);
  store.add("head.b", Tensor::zeros({cfg.labels}), false);
  for (int t = 1; t <= cfg.layers; ++t) {
    auto rng = keyed_rng(seed, fmt::format("layer{}", t));
    add_layer_params(store, t, cfg.dim, rng);
  }
  if (cfg.layers > 0) {
    add_gaussian(store, seed, "classifier.W", cfg.labels, cfg.dim);
    store.add("classifier.b", Tensor::zeros({cfg.labels}), false);
  }
  return store;
}

bool is_stage_a_param(std::string_view name) noexcept {
  return name.starts_with("frontend.") || name.starts_with("head.");
}

Tensor pixel_inputs(const Image& img) {
  const std::size_t n = img.pixel_count();
  Tensor out = Tensor::zeros({n, kPixelInputs});
  const double w = static_cast<double>(img.width);
  const double h = static_cast<double>(img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      auto row = out.row(y * img.width + x);
      for (std::size_t c = 0; c < 3; ++c) row[c] = img.at(x, y, img.channels == 3 ? c : 0);
      row[3] = static_cast<double>(x) / w;
      row[4] = static_cast<double>(y) / h;
    }
  }
  return out;
}

PreparedImage prepare_image(const Image& img, const ParserConfig& cfg, std::span<const int> gt, std::uint64_t seed) {
  cfg.validate();
  SlicParams sp;
  sp.k = std::min(cfg.superpixels, img.pixel_count());
  sp.compactness = cfg.compactness;
  sp.iterations = cfg.slic_iterations;
  sp.seed = seed;
  return prepare_image(img, slic(img, sp), cfg, gt);
}

PreparedImage prepare_image(const Image& img, SuperpixelMap sp, const ParserConfig& cfg, std::span<const int> gt) {
  cfg.validate();
  if (sp.width != img.width || sp.height != img.height) {
    throw ArgumentError("superpixel map and image sizes differ");
  }
  const std::size_t n = img.pixel_count();
  const std::size_t r = sp.region_count();
  PreparedImage out;
  out.pixel_inputs = pixel_inputs(img);
  out.graph = build_graph(sp, Tensor::zeros({r, 0}));
  if (!gt.empty()) {
    if (gt.size() != n) throw ArgumentError(fmt::format("{} ground-truth labels for {} pixels", gt.size(), n));
    Tensor regions = Tensor::zeros({r, cfg.labels});
    Tensor pixels = Tensor::zeros({n, cfg.labels});
    for (std::size_t p = 0; p < n; ++p) {
      const int g = gt[p];
      if (g < 0 || static_cast<std::size_t>(g) >= cfg.labels) {
        throw DataError(fmt::format("pixel {} has label {}, outside [0, {})", p, g, cfg.labels));
      }
      regions.at(static_cast<std::size_t>(sp.labels[p]), static_cast<std::size_t>(g)) += 1.0;
      pixels.at(p, static_cast<std::size_t>(g)) = 1.0;
    }
    out.gt.assign(gt.begin(), gt.end());
    out.region_counts = std::make_shared<const Tensor>(std::move(regions));
    out.pixel_counts = std::make_shared<const Tensor>(std::move(pixels));
  }
  out.sp = std::move(sp);
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor out = logits;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return out;
}

Forward forward(Tape& tape, const ParamStore& store, const PreparedImage& img, const ParserConfig& cfg, Stage stage) {
  const SuperpixelMap& sp = img.sp;
  const double pixels = static_cast<double>(sp.pixel_count());
  const bool labelled = img.region_counts != nullptr;
  Forward f;

  const Var x = tape.constant(img.pixel_inputs);
  f.pixel_features = tape.affine_rows(bind(tape, store, "frontend.W"), bind(tape, store, "frontend.b"), x);
  f.node_features = pool_features(tape, f.pixel_features, sp);

  const Var head_w = bind(tape, store, "head.W");
  const Var head_b = bind(tape, store, "head.b");
  if (cfg.head == HeadMode::node) {
    f.head_logits = tape.affine_rows(head_w, head_b, f.node_features);
    f.confidences = ConfidenceMap{softmax_rows(tape.value(f.head_logits)), cfg.background};
  } else {
    f.head_logits = tape.affine_rows(head_w, head_b, f.pixel_features);
    f.confidences = node_confidences(softmax_rows(tape.value(f.head_logits)), sp, cfg.background);
  }
  f.schedule = make_schedule(cfg.scheduler, f.confidences, img.graph, cfg.focus_label);

  if (stage == Stage::head || cfg.layers == 0) {
    if (cfg.head == HeadMode::node) {
      f.logits = f.head_logits;
      if (labelled) f.loss = tape.softmax_ce(f.head_logits, img.region_counts, pixels);
    } else {
      Tensor log_conf = f.confidences.scores;
      for (double& v : log_conf.data) v = std::log(std::max(v, std::numeric_limits<double>::min()));
      f.logits = tape.constant(std::move(log_conf));
      if (labelled) f.loss = tape.softmax_ce(f.head_logits, img.pixel_counts, pixels);
    }
    return f;
  }

  const std::size_t r = sp.region_count();
  std::vector<Var> inputs(r);
  for (std::size_t i = 0; i < r; ++i) inputs[i] = tape.row(f.node_features, i);
  std::vector<GlstmParams> layers;
  for (int t = 1; t <= cfg.layers; ++t) layers.push_back(bind_layer(tape, store, t, cfg.forget, cfg.gate_input));
  const StackResult stacked = stack_layers(tape, img.graph, inputs, layers, f.schedule, cfg.residual);
  const Var hidden = tape.stack_rows(stacked.output);
  f.logits = tape.affine_rows(bind(tape, store, "classifier.W"), bind(tape, store, "classifier.b"), hidden);
  if (labelled) f.loss = tape.softmax_ce(f.logits, img.region_counts, pixels);
  return f;
}

ParseOutput parse(const PreparedImage& img, const ParserConfig& cfg, const ParamStore& store) {
  Tape tape;
  Forward f = forward(tape, store, img, cfg, Stage::full);
  ParseOutput out;
  out.node_logits = tape.value(f.logits);
  out.pixel_labels = broadcast_labels(out.node_logits, img.sp);
  out.schedule = std::move(f.schedule);
  out.confidences = std::move(f.confidences);
  return out;
}

ParseOutput parse(const Image& img, const ParserConfig& cfg, const ParamStore& store, std::uint64_t seed) {
  return parse(prepare_image(img, cfg, {}, seed), cfg, store);
}

Tensor embed_frontend(const Image& img, const ParamStore& store) {
  Tape tape;
  const Var x = tape.constant(pixel_inputs(img));
  return tape.value(tape.affine_rows(bind(tape, store, "frontend.W"), bind(tape, store, "frontend.b"), x));
}

ConfidenceMap confidence_head(const Tensor& node_features, const ParamStore& store, int background) {
  if (node_features.rank() != 2 || node_features.rows() == 0) {
    throw ArgumentError("confidence head needs a non-empty [R x d] feature matrix");
  }
  Tape tape;
  const Var x = tape.constant(node_features);
  const Var logits = tape.affine_rows(bind(tape, store, "head.W"), bind(tape, store, "head.b"), x);
  return ConfidenceMap{softmax_rows(tape.value(logits)), background};
}

std::vector<int> broadcast_labels(const Tensor& node_scores, const SuperpixelMap& sp) {
  if (node_scores.rank() != 2 || node_scores.rows() != sp.region_count()) {
    throw ArgumentError(fmt::format("score rows do not match the {} regions", sp.region_count()));
  }
  std::vector<int> region_label(sp.region_count());
  for (std::size_t r = 0; r < region_label.size(); ++r) region_label[r] = row_argmax(node_scores.row(r));
  std::vector<int> out(sp.pixel_count());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = region_label[static_cast<std::size_t>(sp.labels[p])];
  return out;
}

std::vector<int> superpixel_smooth(const Tensor& pixel_scores, const SuperpixelMap& sp) {
  if (pixel_scores.rank() != 2 || pixel_scores.rows() != sp.pixel_count()) {
    throw ArgumentError(fmt::format("expected {} score rows, got shape {}", sp.pixel_count(),
                                    shape_string(pixel_scores.shape)));
  }
  return broadcast_labels(pool_features(pixel_scores, sp), sp);
}

double parse_loss(const Tensor& node_logits, const SuperpixelMap& sp, std::span<const int> gt) {
  if (node_logits.rank() != 2 || node_logits.rows() != sp.region_count() || gt.size() != sp.pixel_count()) {
    throw ArgumentError("logits, superpixel map and ground truth do not conform");
  }
  const std::size_t labels = node_logits.cols();
  const Tensor probs = softmax_rows(node_logits);
  double total = 0.0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (gt[p] < 0 || static_cast<std::size_t>(gt[p]) >= labels) {
      throw DataError(fmt::format("pixel {} has label {}, outside [0, {})", p, gt[p], labels));
    }
    total -= std::log(probs.at(static_cast<std::size_t>(sp.labels[p]), static_cast<std::size_t>(gt[p])));
  }
  return total / static_cast<double>(gt.size());
}

}  // namespace glstm
