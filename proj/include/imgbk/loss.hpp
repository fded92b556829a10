#pragma once

#include <cstdint>
#include <vector>

#include "imgbk/graph.hpp"
#include "imgbk/model.hpp"
#include "imgbk/tape.hpp"

namespace imgbk {

// Empirical class frequencies over train nodes only.
struct ClassPriors {
  std::vector<double> pi;                  // sums to 1
  std::vector<std::int64_t> source_counts; // train counts per class
};

ClassPriors class_priors(const std::vector<std::int32_t>& labels,
                         const std::vector<std::uint8_t>& train_mask, std::int32_t n_classes);

// All losses take logits whose rows are the train nodes, with labels aligned
// to those rows, and return a 1x1 tape value (mean over rows).

ValueId cross_entropy(Tape& tape, ValueId logits, const std::vector<std::int32_t>& labels);

// Per-class weight (sum(counts)/m) / counts[c]; weighted mean.
ValueId reweighted_cross_entropy(Tape& tape, ValueId logits, const std::vector<std::int32_t>& labels,
                                 const std::vector<std::int64_t>& counts);

// Adds tau * log(pi_y) to each class logit before the softmax.
ValueId logit_adjusted_loss(Tape& tape, ValueId logits, const std::vector<std::int32_t>& labels,
                            const ClassPriors& priors, double tau);

// Adds log(N_k) to each class logit before the softmax.
ValueId balanced_softmax_loss(Tape& tape, ValueId logits, const std::vector<std::int32_t>& labels,
                              const std::vector<std::int64_t>& counts);

// Binary cross-entropy of sigmoid(gate logit) against same-label targets,
// mean over directed edges with both endpoints in train. Returns a constant
// zero if no such edge exists.
ValueId gate_consistency_loss(Tape& tape, ValueId gate_logits, const Graph& g,
                              const std::vector<std::uint8_t>& train_mask);

// L = l_im + lambda * sum_l gate_losses[l] in Learned mode; L = l_im
// otherwise (gate_losses must then be empty).
ValueId total_loss(Tape& tape, const ModelConfig& cfg, ValueId l_im,
                   const std::vector<ValueId>& gate_losses);

// Dispatches on cfg.loss_kind with counts/priors computed from train nodes.
ValueId imbalance_loss(Tape& tape, const ModelConfig& cfg, ValueId train_logits,
                       const std::vector<std::int32_t>& train_labels,
                       const std::vector<std::int64_t>& train_counts);

}  // namespace imgbk
