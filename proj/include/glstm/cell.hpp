#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "glstm/graph.hpp"
#include "glstm/params.hpp"
#include "glstm/schedule.hpp"
#include "glstm/tape.hpp"

namespace glstm {

enum class ForgetVariant : std::uint8_t {
  /// One forget gate per neighbour, mixing in the neighbours' memories.
  adaptive,
  /// A single forget gate that also sees the neighbour hidden average; the
  /// neighbour memory term is dropped.
  identical,
};

/// Which hidden state of neighbour j feeds its adaptive forget gate.
enum class NeighborGateInput : std::uint8_t {
  /// h_j from the previous layer, as the gate formula is written.
  previous_layer,
  /// h_j from this pass when j is already updated, else the previous layer.
  latest,
};

std::string_view variant_name(ForgetVariant v) noexcept;
ForgetVariant parse_variant(std::string_view name);

/// Tape handles for one layer's weights. Matrices are d x d, biases d.
struct GlstmParams {
  Var Wu, Wf, Wc, Wo;      // input features
  Var Uu, Uf, Uc, Uo;      // the node's own previous hidden state
  Var Uun, Ufn, Ucn, Uon;  // neighbour hidden states
  Var bu, bf, bc, bo;
  ForgetVariant variant = ForgetVariant::adaptive;
  NeighborGateInput gate_input = NeighborGateInput::previous_layer;
  std::size_t dim = 0;
};

/// "layer{t}.{suffix}" with t starting at 1.
std::string layer_param_name(int layer, std::string_view suffix);
/// Suffixes of every per-layer parameter, weights first.
std::span<const std::string_view> layer_param_suffixes() noexcept;

/// Registers layer t's weights (uniform on [-0.1, 0.1]) and zero biases.
void add_layer_params(ParamStore& store, int layer, std::size_t dim, std::mt19937_64& rng);
/// Same, for weights drawn by the caller. Used by tests with fixed values.
void add_layer_params(ParamStore& store, int layer, std::size_t dim, double weight_value, double bias_value);

GlstmParams bind_layer(Tape& tape, const ParamStore& store, int layer, ForgetVariant variant,
                       NeighborGateInput gate_input = NeighborGateInput::previous_layer);

/// Per-node hidden and memory states of one layer pass.
struct LayerState {
  std::vector<Var> h;
  std::vector<Var> m;
};

/// All-zero states for `nodes` nodes of width `dim` (initial layer input).
LayerState zero_state(Tape& tape, std::size_t nodes, std::size_t dim);

/// Mean over neighbours j of (updated[j] if j is flagged, else previous[j]).
/// Returns a zero vector for a node with no neighbours.
Var avg_neighbor_hidden(Tape& tape, std::size_t node, const NodeGraph& g, std::span<const Var> previous,
                        std::span<const Var> updated, const VisitFlags& flags, std::size_t dim);

/// Updates one node: computes its gates from its input, its previous states
/// and its neighbours' states, stores the new (h, m) in `next`, and flags
/// the node. Throws ContractError on width mismatch or a repeated update.
std::pair<Var, Var> update_node(Tape& tape, std::size_t node, Var input, const NodeGraph& g,
                                const LayerState& prev, LayerState& next, VisitFlags& flags,
                                const GlstmParams& p);

/// One full pass: update_node for every node in schedule order.
LayerState run_layer(Tape& tape, const NodeGraph& g, std::span<const Var> inputs, const LayerState& prev,
                     const UpdateSchedule& schedule, const GlstmParams& p);

struct StackResult {
  LayerState last;
  /// Classifier input per node: last h, plus the last layer's input when
  /// residual connections are on.
  std::vector<Var> output;
};

/// Runs the layers in order. Layer 1 reads `inputs` and zero states; layer
/// t+1 reads input_t + h_t (residual) or h_t, and layer t's states as its
/// previous states.
StackResult stack_layers(Tape& tape, const NodeGraph& g, std::span<const Var> inputs,
                         std::span<const GlstmParams> layers, const UpdateSchedule& schedule, bool residual);

}  // namespace glstm
