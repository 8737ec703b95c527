#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "glstm/cell.hpp"
#include "glstm/graph.hpp"
#include "glstm/image.hpp"
#include "glstm/params.hpp"
#include "glstm/schedule.hpp"
#include "glstm/superpixel.hpp"
#include "glstm/tape.hpp"

namespace glstm {

/// Where the initial confidence head runs.
enum class HeadMode : std::uint8_t {
  /// Affine map on pooled node features, softmax per node.
  node,
  /// Affine map per pixel, softmax per pixel, then region means.
  pixel,
};

std::string_view head_mode_name(HeadMode m) noexcept;
HeadMode parse_head_mode(std::string_view name);

struct ParserConfig {
  std::size_t dim = 16;
  /// Graph LSTM layers; 0 gives the head-only baseline.
  int layers = 2;
  std::size_t labels = 7;
  int background = 0;
  std::size_t superpixels = 200;
  double compactness = 10.0;
  int slic_iterations = 10;
  Scheme scheduler = Scheme::cds;
  ForgetVariant forget = ForgetVariant::adaptive;
  bool residual = true;
  HeadMode head = HeadMode::node;
  NeighborGateInput gate_input = NeighborGateInput::previous_layer;
  std::optional<int> focus_label;

  /// Throws ArgumentError on an inconsistent configuration.
  void validate() const;
};

/// Number of per-pixel frontend inputs: three colour channels, x/W, y/H.
inline constexpr std::size_t kPixelInputs = 5;

/// Registers every parameter of the parser. Each tensor is drawn from its
/// own generator keyed by (seed, name), so a tensor's initial value does
/// not depend on which other tensors exist.
ParamStore make_parser_params(const ParserConfig& cfg, std::uint64_t seed);

/// Names of the parameters trained in the first stage.
[[nodiscard]] bool is_stage_a_param(std::string_view name) noexcept;

/// Per-image work that does not depend on the parameters.
struct PreparedImage {
  SuperpixelMap sp;
  Tensor pixel_inputs;  // [H*W x 5]
  NodeGraph graph;      // topology and centroids; features are filled per forward pass
  std::vector<int> gt;  // empty when unlabelled
  std::shared_ptr<const Tensor> region_counts;  // [R x L] label histogram per region
  std::shared_ptr<const Tensor> pixel_counts;   // [H*W x L] one-hot
};

/// Per-pixel frontend inputs (c1, c2, c3, x/W, y/H); grey images repeat
/// their channel.
Tensor pixel_inputs(const Image& img);

/// Runs SLIC and builds the region graph. Throws DataError when a ground
/// truth label is outside [0, L).
PreparedImage prepare_image(const Image& img, const ParserConfig& cfg, std::span<const int> gt = {},
                            std::uint64_t seed = 0);
/// Same, with a caller-supplied superpixel map.
PreparedImage prepare_image(const Image& img, SuperpixelMap sp, const ParserConfig& cfg,
                            std::span<const int> gt = {});

enum class Stage : std::uint8_t {
  /// Frontend and confidence head only.
  head,
  /// Frontend, Graph LSTM stack and final classifier.
  full,
};

struct Forward {
  Var pixel_features;  // [H*W x d]
  Var node_features;   // [R x d]
  Var head_logits;     // [R x L] (node head) or [H*W x L] (pixel head)
  ConfidenceMap confidences;
  UpdateSchedule schedule;
  /// Per-node scores whose row argmax is the prediction. For the pixel head
  /// in the head stage these are log pooled confidences.
  Var logits;
  Var loss;  // invalid when the image has no ground truth
};

/// Records the forward pass (and the loss when ground truth is present).
/// With layers == 0 the full stage falls back to the head stage.
Forward forward(Tape& tape, const ParamStore& store, const PreparedImage& img, const ParserConfig& cfg, Stage stage);

struct ParseOutput {
  Tensor node_logits;             // [R x L]
  std::vector<int> pixel_labels;  // [H*W]
  UpdateSchedule schedule;
  ConfidenceMap confidences;
};

ParseOutput parse(const PreparedImage& img, const ParserConfig& cfg, const ParamStore& store);
ParseOutput parse(const Image& img, const ParserConfig& cfg, const ParamStore& store, std::uint64_t seed = 0);

/// Frontend on its own: [H*W x d].
Tensor embed_frontend(const Image& img, const ParamStore& store);
/// Affine map plus softmax per node on [R x d] features.
ConfidenceMap confidence_head(const Tensor& node_features, const ParamStore& store, int background);

/// Row argmax per region, copied to every member pixel. Ties go to the
/// smaller label.
std::vector<int> broadcast_labels(const Tensor& node_scores, const SuperpixelMap& sp);
/// Averages per-pixel scores [H*W x L] within each region and labels every
/// member pixel with the region's argmax. Throws ArgumentError on a size
/// mismatch.
std::vector<int> superpixel_smooth(const Tensor& pixel_scores, const SuperpixelMap& sp);

/// Pixel-mean cross-entropy of the region-broadcast softmax of `node_logits`
/// against `gt`. Throws DataError on a label outside [0, L).
double parse_loss(const Tensor& node_logits, const SuperpixelMap& sp, std::span<const int> gt);

/// Row-wise softmax of a [R x L] matrix.
Tensor softmax_rows(const Tensor& logits);

}  // namespace glstm
