#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "imgbk/graph.hpp"
#include "imgbk/optim.hpp"
#include "imgbk/tape.hpp"

namespace imgbk {

enum class GateMode {
  None,     // plain GCN propagation
  Learned,  // per-layer sigmoid gate over endpoint embeddings
  Fast,     // fixed per-edge gate precomputed from train labels and H(G)
};

enum class LossKind { CrossEntropy, ReweightedCE, LogitAdjusted, BalancedSoftmax };

enum class Activation { Tanh, Identity };

struct ModelConfig {
  std::vector<std::int64_t> layer_sizes;  // input d, hidden..., n_classes
  GateMode gate_mode = GateMode::None;
  double epsilon = 0.1;  // fast-gate minimum similarity threshold, in (0, 0.5)
  double lambda = 1.0;   // gate-loss weight
  double tau = 1.0;      // logit-adjustment temperature
  LossKind loss_kind = LossKind::CrossEntropy;
  Activation activation = Activation::Tanh;
  bool fast_gate_train_only_homophily = true;  // H(G) from train-train edges only

  std::int64_t n_layers() const { return static_cast<std::int64_t>(layer_sizes.size()) - 1; }
  void validate() const;
};

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Per-directed-edge gate values aligned with csr_neighbors. Symmetric by
// construction: alpha(i->j) == alpha(j->i).
struct GateTable {
  std::vector<double> alpha;
  double fallback_homophily = 0.0;  // the H(G) used for non-train edges
};

// Fixed gate: train-train edges get 1-eps (same label) or eps (different
// label); every other edge gets the graph-level homophily ratio, computed
// from train-train edges when train_only_homophily is set (label-leak
// avoidance), else from all edges.
GateTable fast_gate_table(const Graph& g, const SplitMasks& masks, double epsilon,
                          bool train_only_homophily = true);

// Graph-level homophily over edges with both endpoints in train. Falls back
// to 0.5 with a warning when no such edge exists.
double train_visible_homophily(const Graph& g, const SplitMasks& masks);

// Scalar form of the learned gate for a single node pair (order [h_i, h_j]).
double learned_gate(std::span<const double> h_i, std::span<const double> h_j, const Tensor& w_g);

// Pre-activation GCN layer: symmetric-normalized propagation with
// self-loops, then linear map.
ValueId gcn_layer(Tape& tape, ValueId h, const Graph& g, ValueId w);

// Pre-activation bi-kernel layer, fixed per-edge gates (aggregate first,
// transform once per kernel).
ValueId gbk_layer_fast(Tape& tape, ValueId h, const Graph& g, ValueId wf, ValueId ws, ValueId wd,
                       const std::vector<double>& alpha);

// Pre-activation bi-kernel layer with a differentiable E x 1 gate; kernels
// are applied per edge.
ValueId gbk_layer_learned(Tape& tape, ValueId h, const Graph& g, ValueId wf, ValueId ws, ValueId wd,
                          ValueId alpha);

struct ForwardResult {
  ValueId logits = -1;                  // n x m, raw (no activation)
  std::vector<ValueId> gate_logits;     // per layer, E x 1; Learned mode only
};

// Parameter names for a config, in creation order.
std::vector<std::string> model_param_names(const ModelConfig& cfg);

// Glorot-initializes all parameters for cfg into a fresh store.
ParamStore init_model_params(const ModelConfig& cfg, std::uint64_t seed);

// Full forward pass. Fast mode requires `table`; Learned mode returns
// pre-sigmoid gate logits per layer.
ForwardResult model_forward(TapeBinding& binding, const Graph& g, const ModelConfig& cfg,
                            const GateTable* table = nullptr);

}  // namespace imgbk
