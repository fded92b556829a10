#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "imgbk/graph.hpp"
#include "imgbk/tensor.hpp"

namespace imgbk {

using ValueId = std::int32_t;

// Reverse-mode tape over dense float64 tensors. Nodes are appended in
// evaluation order, which is already a topological order; backward() walks
// them once in reverse, accumulating vector-Jacobian products. Every
// primitive checks its output for NaN/Inf and throws NumericalError.
//
// Graph-aware primitives keep a pointer to the Graph; the Graph must outlive
// the tape (all call sites own the graph for the whole run).
class Tape {
 public:
  // Leaf holding an externally supplied tensor whose gradient is tracked.
  ValueId leaf(Tensor value);

  // Leaf with no gradient: inputs, fixed gate tables, loss offsets. Backward
  // skips every computation that only feeds constants.
  ValueId constant(Tensor value);

  bool needs_grad(ValueId id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

  ValueId matmul(ValueId a, ValueId b);
  ValueId add(ValueId a, ValueId b);
  ValueId scale(ValueId a, double c);
  ValueId tanh(ValueId a);
  ValueId sigmoid(ValueId a);
  ValueId concat_cols(ValueId a, ValueId b);
  ValueId select_rows(ValueId a, std::vector<std::int64_t> rows);
  ValueId log_softmax_rows(ValueId a);

  // GCN propagation with self-loops: out[i] = sum_{j in N(i) u {i}}
  // h[j] / sqrt((deg_i + 1)(deg_j + 1)).
  ValueId sym_norm_aggregate(ValueId h, const Graph& g);

  // out[i] = (1/|N(i)|) sum_{e in row i} alpha_e * h[target(e)]; zero row
  // for isolated nodes. alpha is an E x 1 tape value (may be a plain leaf).
  ValueId gated_neighbor_mean(ValueId h, ValueId alpha, const Graph& g);

  // Edge-wise bi-kernel aggregation: out[i] = (1/|N(i)|) sum_{e in row i}
  // [alpha_e * (h_j ws) + (1 - alpha_e) * (h_j wd)]. The kernels are applied
  // per edge in both passes; cost scales with |E| * d_in * d_out.
  ValueId bikernel_edge_aggregate(ValueId h, ValueId ws, ValueId wd, ValueId alpha, const Graph& g);

  // Per-directed-edge gate logits: out_e = [h_src(e), h_dst(e)] . wg with
  // wg shaped (2d x 1); result is E x 1.
  ValueId edge_gate_logits(ValueId h, ValueId wg, const Graph& g);

  // Weighted mean of -logp[t, labels[t]]: (1/n) sum_t w_t * (-logp[t, y_t]).
  ValueId picked_neg_mean(ValueId logp, std::vector<std::int32_t> labels, std::vector<double> weights);

  // Mean over selected entries of the stable binary cross-entropy
  // softplus(-x) + (1 - target) * x of an E x 1 logit column.
  ValueId bce_logits_mean(ValueId logits, std::vector<double> targets, std::vector<std::uint8_t> select);

  void backward(ValueId root);

  const Tensor& value(ValueId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Tensor& grad(ValueId id) const;
  std::size_t size() const { return nodes_.size(); }
  void reset();

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&)> vjp;  // empty for leaves
    bool needs_grad = true;          // false when no tracked leaf is upstream
  };

  ValueId push(Tensor value, std::function<void(Tape&)> vjp, const char* op,
               std::initializer_list<ValueId> parents = {});
  Tensor& grad_mut(ValueId id) { return nodes_[static_cast<std::size_t>(id)].grad; }

  // deque keeps references from value()/grad() stable across later pushes
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace imgbk
