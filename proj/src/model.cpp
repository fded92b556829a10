#include "imgbk/model.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "imgbk/errors.hpp"

namespace imgbk {

void ModelConfig::validate() const {
  if (layer_sizes.size() < 3)
    throw std::invalid_argument("ModelConfig: need at least 2 layers (3 layer sizes)");
  for (std::int64_t s : layer_sizes) {
    if (s <= 0) throw std::invalid_argument("ModelConfig: layer sizes must be positive");
  }
  if (epsilon <= 0.0 || epsilon >= 0.5)
    throw std::invalid_argument("ModelConfig: epsilon must lie in (0, 0.5)");
  if (lambda < 0.0) throw std::invalid_argument("ModelConfig: lambda must be >= 0");
}

namespace {

std::string gate_mode_name(GateMode m) {
  switch (m) {
    case GateMode::None: return "none";
    case GateMode::Learned: return "learned";
    case GateMode::Fast: return "fast";
  }
  return "none";
}

GateMode gate_mode_from_name(const std::string& s) {
  if (s == "none") return GateMode::None;
  if (s == "learned") return GateMode::Learned;
  if (s == "fast") return GateMode::Fast;
  throw std::invalid_argument("unknown gate mode: " + s);
}

std::string loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::CrossEntropy: return "ce";
    case LossKind::ReweightedCE: return "reweight";
    case LossKind::LogitAdjusted: return "logit-adj";
    case LossKind::BalancedSoftmax: return "balanced";
  }
  return "ce";
}

LossKind loss_kind_from_name(const std::string& s) {
  if (s == "ce") return LossKind::CrossEntropy;
  if (s == "reweight") return LossKind::ReweightedCE;
  if (s == "logit-adj") return LossKind::LogitAdjusted;
  if (s == "balanced") return LossKind::BalancedSoftmax;
  throw std::invalid_argument("unknown loss kind: " + s);
}

}  // namespace

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["layer_sizes"] = cfg.layer_sizes;
  j["gate_mode"] = gate_mode_name(cfg.gate_mode);
  j["epsilon"] = cfg.epsilon;
  j["lambda"] = cfg.lambda;
  j["tau"] = cfg.tau;
  j["loss_kind"] = loss_kind_name(cfg.loss_kind);
  j["activation"] = cfg.activation == Activation::Tanh ? "tanh" : "identity";
  j["fast_gate_train_only_homophily"] = cfg.fast_gate_train_only_homophily;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.layer_sizes = j.at("layer_sizes").get<std::vector<std::int64_t>>();
  cfg.gate_mode = gate_mode_from_name(j.at("gate_mode").get<std::string>());
  cfg.epsilon = j.value("epsilon", 0.1);
  cfg.lambda = j.value("lambda", 1.0);
  cfg.tau = j.value("tau", 1.0);
  cfg.loss_kind = loss_kind_from_name(j.value("loss_kind", std::string("ce")));
  cfg.activation = j.value("activation", std::string("tanh")) == "identity" ? Activation::Identity
                                                                            : Activation::Tanh;
  cfg.fast_gate_train_only_homophily = j.value("fast_gate_train_only_homophily", true);
  cfg.validate();
  return cfg;
}

double train_visible_homophily(const Graph& g, const SplitMasks& masks) {
  std::int64_t total = 0;
  std::int64_t same = 0;
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (!masks.train[static_cast<std::size_t>(i)]) continue;
    for (std::int32_t j : g.neighbors(i)) {
      if (j <= i || !masks.train[static_cast<std::size_t>(j)]) continue;
      ++total;
      if (g.labels[static_cast<std::size_t>(i)] == g.labels[static_cast<std::size_t>(j)]) ++same;
    }
  }
  if (total == 0) {
    std::cerr << "warning: no train-train edges; homophily fallback set to 0.5\n";
    return 0.5;
  }
  return static_cast<double>(same) / static_cast<double>(total);
}

GateTable fast_gate_table(const Graph& g, const SplitMasks& masks, double epsilon,
                          bool train_only_homophily) {
  if (epsilon <= 0.0 || epsilon >= 0.5)
    throw std::invalid_argument("fast_gate_table: epsilon must lie in (0, 0.5)");
  if (static_cast<std::int64_t>(masks.train.size()) != g.n_nodes)
    throw std::invalid_argument("fast_gate_table: mask size mismatch");

  double hg;
  if (train_only_homophily) {
    hg = train_visible_homophily(g, masks);
  } else {
    std::int64_t same = 0;
    for (std::int64_t i = 0; i < g.n_nodes; ++i) {
      for (std::int32_t j : g.neighbors(i)) {
        if (j > i && g.labels[static_cast<std::size_t>(i)] == g.labels[static_cast<std::size_t>(j)]) ++same;
      }
    }
    hg = g.n_edges > 0 ? static_cast<double>(same) / static_cast<double>(g.n_edges) : 0.5;
  }

  GateTable table;
  table.fallback_homophily = hg;
  table.alpha.assign(g.csr_neighbors.size(), hg);
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (!masks.train[static_cast<std::size_t>(i)]) continue;
    for (std::int64_t e = g.csr_offsets[i]; e < g.csr_offsets[i + 1]; ++e) {
      const std::int32_t j = g.csr_neighbors[e];
      if (!masks.train[static_cast<std::size_t>(j)]) continue;
      const bool same = g.labels[static_cast<std::size_t>(i)] == g.labels[static_cast<std::size_t>(j)];
      table.alpha[static_cast<std::size_t>(e)] =
          std::max((1.0 - epsilon) * (same ? 1.0 : 0.0), epsilon);
    }
  }
  return table;
}

double learned_gate(std::span<const double> h_i, std::span<const double> h_j, const Tensor& w_g) {
  const auto d = static_cast<std::int64_t>(h_i.size());
  if (static_cast<std::int64_t>(h_j.size()) != d || w_g.rows() != 2 * d || w_g.cols() != 1)
    throw std::invalid_argument("learned_gate: shape mismatch");
  double logit = 0.0;
  for (std::int64_t r = 0; r < d; ++r) logit += h_i[r] * w_g(r, 0);
  for (std::int64_t r = 0; r < d; ++r) logit += h_j[r] * w_g(d + r, 0);
  return logit >= 0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
}

ValueId gcn_layer(Tape& tape, ValueId h, const Graph& g, ValueId w) {
  return tape.matmul(tape.sym_norm_aggregate(h, g), w);
}

ValueId gbk_layer_fast(Tape& tape, ValueId h, const Graph& g, ValueId wf, ValueId ws, ValueId wd,
                       const std::vector<double>& alpha) {
  if (alpha.size() != g.csr_neighbors.size())
    throw std::invalid_argument("gbk_layer_fast: gate table size mismatch");
  Tensor a(static_cast<std::int64_t>(alpha.size()), 1);
  Tensor b(static_cast<std::int64_t>(alpha.size()), 1);
  for (std::size_t e = 0; e < alpha.size(); ++e) {
    a.data()[e] = alpha[e];
    b.data()[e] = 1.0 - alpha[e];
  }
  ValueId self = tape.matmul(h, wf);
  ValueId hom = tape.matmul(tape.gated_neighbor_mean(h, tape.constant(std::move(a)), g), ws);
  ValueId het = tape.matmul(tape.gated_neighbor_mean(h, tape.constant(std::move(b)), g), wd);
  return tape.add(self, tape.add(hom, het));
}

ValueId gbk_layer_learned(Tape& tape, ValueId h, const Graph& g, ValueId wf, ValueId ws, ValueId wd,
                          ValueId alpha) {
  ValueId self = tape.matmul(h, wf);
  return tape.add(self, tape.bikernel_edge_aggregate(h, ws, wd, alpha, g));
}

std::vector<std::string> model_param_names(const ModelConfig& cfg) {
  std::vector<std::string> names;
  for (std::int64_t l = 0; l < cfg.n_layers(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    if (cfg.gate_mode == GateMode::None) {
      names.push_back(prefix + "W");
    } else {
      names.push_back(prefix + "Wf");
      names.push_back(prefix + "Ws");
      names.push_back(prefix + "Wd");
      if (cfg.gate_mode == GateMode::Learned) names.push_back(prefix + "Wg");
    }
  }
  return names;
}

ParamStore init_model_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamStore store;
  Prng root(seed);
  std::uint64_t stream = 0;
  for (std::int64_t l = 0; l < cfg.n_layers(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    const std::int64_t din = cfg.layer_sizes[static_cast<std::size_t>(l)];
    const std::int64_t dout = cfg.layer_sizes[static_cast<std::size_t>(l) + 1];
    auto glorot = [&](std::int64_t r, std::int64_t c) {
      Prng rng = root.split(stream++);
      return glorot_init(rng, r, c);
    };
    if (cfg.gate_mode == GateMode::None) {
      store.add(prefix + "W", glorot(din, dout));
    } else {
      store.add(prefix + "Wf", glorot(din, dout));
      store.add(prefix + "Ws", glorot(din, dout));
      store.add(prefix + "Wd", glorot(din, dout));
      if (cfg.gate_mode == GateMode::Learned) store.add(prefix + "Wg", glorot(2 * din, 1));
    }
  }
  return store;
}

ForwardResult model_forward(TapeBinding& binding, const Graph& g, const ModelConfig& cfg,
                            const GateTable* table) {
  cfg.validate();
  if (cfg.layer_sizes.front() != g.feature_dim())
    throw std::invalid_argument("model_forward: input size != feature dim");
  if (cfg.layer_sizes.back() != g.n_classes)
    throw std::invalid_argument("model_forward: output size != n_classes");
  if (cfg.gate_mode == GateMode::Fast && table == nullptr)
    throw std::invalid_argument("model_forward: Fast mode requires a GateTable");

  Tape& tape = binding.tape;
  ForwardResult result;
  ValueId h = tape.constant(g.features);
  for (std::int64_t l = 0; l < cfg.n_layers(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    ValueId z = -1;
    switch (cfg.gate_mode) {
      case GateMode::None: {
        z = gcn_layer(tape, h, g, binding.param(prefix + "W"));
        break;
      }
      case GateMode::Fast: {
        z = gbk_layer_fast(tape, h, g, binding.param(prefix + "Wf"), binding.param(prefix + "Ws"),
                           binding.param(prefix + "Wd"), table->alpha);
        break;
      }
      case GateMode::Learned: {
        ValueId gate_logit = tape.edge_gate_logits(h, binding.param(prefix + "Wg"), g);
        result.gate_logits.push_back(gate_logit);
        ValueId alpha = tape.sigmoid(gate_logit);
        z = gbk_layer_learned(tape, h, g, binding.param(prefix + "Wf"),
                              binding.param(prefix + "Ws"), binding.param(prefix + "Wd"), alpha);
        break;
      }
    }
    const bool last = l + 1 == cfg.n_layers();
    if (last) {
      h = z;  // raw logits
    } else {
      h = cfg.activation == Activation::Tanh ? tape.tanh(z) : z;
    }
  }
  result.logits = h;
  return result;
}

}  // namespace imgbk
