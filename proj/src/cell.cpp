#include "glstm/cell.hpp"

#include <array>

#include <fmt/format.h>

#include "glstm/errors.hpp"

namespace glstm {
namespace {

constexpr std::array<std::string_view, 16> kSuffixes{"Wu",  "Wf",  "Wc",  "Wo",  "Uu", "Uf", "Uc", "Uo",
                                                     "Uun", "Ufn", "Ucn", "Uon", "bu", "bf", "bc", "bo"};

bool is_bias(std::string_view suffix) { return suffix.front() == 'b'; }

void require_width(const Tape& tape, Var v, std::size_t dim, const char* what, std::size_t node) {
  const Tensor& t = tape.value(v);
  if (t.rank() != 1 || t.shape[0] != dim) {
    throw ContractError(fmt::format("node {}: {} has shape {}, layer width is {}", node, what,
                                    shape_string(t.shape), dim));
  }
}

}  // namespace

std::string_view variant_name(ForgetVariant v) noexcept {
  return v == ForgetVariant::adaptive ? "adaptive" : "identical";
}

ForgetVariant parse_variant(std::string_view name) {
  if (name == "adaptive") return ForgetVariant::adaptive;
  if (name == "identical") return ForgetVariant::identical;
  throw ArgumentError(fmt::format("unknown forget-gate variant '{}'", name));
}

std::string layer_param_name(int layer, std::string_view suffix) { return fmt::format("layer{}.{}", layer, suffix); }

std::span<const std::string_view> layer_param_suffixes() noexcept { return kSuffixes; }

void add_layer_params(ParamStore& store, int layer, std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(-0.1, 0.1);
  for (std::string_view s : kSuffixes) {
    if (is_bias(s)) {
      store.add(layer_param_name(layer, s), Tensor::zeros({dim}), false);
    } else {
      Tensor w = Tensor::zeros({dim, dim});
      for (double& v : w.data) v = uniform(rng);
      store.add(layer_param_name(layer, s), std::move(w), true);
    }
  }
}

void add_layer_params(ParamStore& store, int layer, std::size_t dim, double weight_value, double bias_value) {
  for (std::string_view s : kSuffixes) {
    if (is_bias(s)) {
      store.add(layer_param_name(layer, s), Tensor::filled({dim}, bias_value), false);
    } else {
      store.add(layer_param_name(layer, s), Tensor::filled({dim, dim}, weight_value), true);
    }
  }
}

GlstmParams bind_layer(Tape& tape, const ParamStore& store, int layer, ForgetVariant variant,
                       NeighborGateInput gate_input) {
  auto get = [&](std::string_view s) { return tape.param(store, store.index_of(layer_param_name(layer, s))); };
  GlstmParams p;
  p.Wu = get("Wu");
  p.Wf = get("Wf");
  p.Wc = get("Wc");
  p.Wo = get("Wo");
  p.Uu = get("Uu");
  p.Uf = get("Uf");
  p.Uc = get("Uc");
  p.Uo = get("Uo");
  p.Uun = get("Uun");
  p.Ufn = get("Ufn");
  p.Ucn = get("Ucn");
  p.Uon = get("Uon");
  p.bu = get("bu");
  p.bf = get("bf");
  p.bc = get("bc");
  p.bo = get("bo");
  p.variant = variant;
  p.gate_input = gate_input;
  p.dim = tape.value(p.bu).size();
  for (Var w : {p.Wu, p.Wf, p.Wc, p.Wo, p.Uu, p.Uf, p.Uc, p.Uo, p.Uun, p.Ufn, p.Ucn, p.Uon}) {
    const Tensor& t = tape.value(w);
    if (t.rank() != 2 || t.shape[0] != p.dim || t.shape[1] != p.dim) {
      throw ContractError(fmt::format("layer {} weights must be {}x{} matrices", layer, p.dim, p.dim));
    }
  }
  for (Var b : {p.bf, p.bc, p.bo}) {
    if (tape.value(b).shape != std::vector<std::size_t>{p.dim}) {
      throw ContractError(fmt::format("layer {} biases must have length {}", layer, p.dim));
    }
  }
  return p;
}

LayerState zero_state(Tape& tape, std::size_t nodes, std::size_t dim) {
  const Var zero = tape.constant(Tensor::zeros({dim}));
  return LayerState{std::vector<Var>(nodes, zero), std::vector<Var>(nodes, zero)};
}

Var avg_neighbor_hidden(Tape& tape, std::size_t node, const NodeGraph& g, std::span<const Var> previous,
                        std::span<const Var> updated, const VisitFlags& flags, std::size_t dim) {
  const auto nbrs = g.neighbors(node);
  if (nbrs.empty()) return tape.constant(Tensor::zeros({dim}));
  std::vector<Var> terms;
  terms.reserve(nbrs.size());
  for (std::size_t j : nbrs) terms.push_back(flags.visited(j) ? updated[j] : previous[j]);
  return tape.mean_of(terms);
}

std::pair<Var, Var> update_node(Tape& tape, std::size_t node, Var input, const NodeGraph& g,
                                const LayerState& prev, LayerState& next, VisitFlags& flags,
                                const GlstmParams& p) {
  const std::size_t n = g.node_count();
  if (node >= n) throw ContractError(fmt::format("node {} out of range", node));
  if (prev.h.size() != n || prev.m.size() != n || next.h.size() != n || next.m.size() != n ||
      flags.size() != n) {
    throw ContractError("state tables do not match the graph");
  }
  if (flags.visited(node)) throw ContractError(fmt::format("node {} updated twice in one pass", node));
  const std::size_t d = p.dim;
  require_width(tape, input, d, "input", node);
  require_width(tape, prev.h[node], d, "previous hidden state", node);
  require_width(tape, prev.m[node], d, "previous memory state", node);

  const auto nbrs = g.neighbors(node);
  const Var h_self = prev.h[node];
  const Var m_self = prev.m[node];
  const Var h_bar = avg_neighbor_hidden(tape, node, g, prev.h, next.h, flags, d);

  const Var g_u = tape.sigmoid(tape.linear(p.bu, {{p.Wu, input}, {p.Uu, h_self}, {p.Uun, h_bar}}));
  const Var g_o = tape.sigmoid(tape.linear(p.bo, {{p.Wo, input}, {p.Uo, h_self}, {p.Uon, h_bar}}));
  const Var g_c = tape.tanh(tape.linear(p.bc, {{p.Wc, input}, {p.Uc, h_self}, {p.Ucn, h_bar}}));

  Var memory;
  if (p.variant == ForgetVariant::adaptive) {
    // W^f f + b^f is shared by the node's own gate and every neighbour gate.
    const Var forget_in = tape.linear(p.bf, {{p.Wf, input}});
    const Var g_f = tape.sigmoid(tape.linear(forget_in, {{p.Uf, h_self}}));
    memory = tape.add(tape.mul(g_f, m_self), tape.mul(g_u, g_c));
    if (!nbrs.empty()) {
      std::vector<Var> gated;
      gated.reserve(nbrs.size());
      for (std::size_t j : nbrs) {
        const bool fresh = flags.visited(j);
        const Var h_j = (p.gate_input == NeighborGateInput::latest && fresh) ? next.h[j] : prev.h[j];
        const Var m_j = fresh ? next.m[j] : prev.m[j];
        const Var g_fj = tape.sigmoid(tape.linear(forget_in, {{p.Ufn, h_j}}));
        gated.push_back(tape.mul(g_fj, m_j));
      }
      memory = tape.add(tape.mean_of(gated), memory);
    }
  } else {
    const Var g_f = tape.sigmoid(tape.linear(p.bf, {{p.Wf, input}, {p.Uf, h_self}, {p.Ufn, h_bar}}));
    memory = tape.add(tape.mul(g_f, m_self), tape.mul(g_u, g_c));
  }
  const Var hidden = tape.tanh(tape.mul(g_o, memory));

  next.h[node] = hidden;
  next.m[node] = memory;
  flags.mark(node);
  return {hidden, memory};
}

LayerState run_layer(Tape& tape, const NodeGraph& g, std::span<const Var> inputs, const LayerState& prev,
                     const UpdateSchedule& schedule, const GlstmParams& p) {
  const std::size_t n = g.node_count();
  if (!is_permutation_of(schedule.order, n)) {
    throw ContractError(fmt::format("schedule is not a permutation of the graph's {} nodes", n));
  }
  if (inputs.size() != n) throw ContractError("one input per node required");
  LayerState next{std::vector<Var>(n), std::vector<Var>(n)};
  VisitFlags flags(n);
  for (std::size_t node : schedule.order) update_node(tape, node, inputs[node], g, prev, next, flags, p);
  return next;
}

StackResult stack_layers(Tape& tape, const NodeGraph& g, std::span<const Var> inputs,
                         std::span<const GlstmParams> layers, const UpdateSchedule& schedule, bool residual) {
  const std::size_t n = g.node_count();
  if (inputs.size() != n) throw ContractError("one input per node required");
  if (layers.empty()) return StackResult{LayerState{}, std::vector<Var>(inputs.begin(), inputs.end())};
  const std::size_t d = layers.front().dim;
  for (const auto& l : layers) {
    if (l.dim != d) throw ContractError("all stacked layers must share one width");
  }
  for (std::size_t i = 0; i < n; ++i) require_width(tape, inputs[i], d, "input", i);

  std::vector<Var> layer_input(inputs.begin(), inputs.end());
  LayerState state = zero_state(tape, n, d);
  for (std::size_t t = 0; t < layers.size(); ++t) {
    state = run_layer(tape, g, layer_input, state, schedule, layers[t]);
    for (std::size_t i = 0; i < n; ++i) {
      layer_input[i] = residual ? tape.add(layer_input[i], state.h[i]) : state.h[i];
    }
  }
  return StackResult{std::move(state), std::move(layer_input)};
}

}  // namespace glstm
