#include "imgbk/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace imgbk {

ClassPriors class_priors(const std::vector<std::int32_t>& labels,
                         const std::vector<std::uint8_t>& train_mask, std::int32_t n_classes) {
  if (labels.size() != train_mask.size())
    throw std::invalid_argument("class_priors: labels/mask length mismatch");
  ClassPriors priors;
  priors.source_counts.assign(static_cast<std::size_t>(n_classes), 0);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!train_mask[i]) continue;
    ++priors.source_counts[static_cast<std::size_t>(labels[i])];
    ++total;
  }
  if (total == 0) throw std::invalid_argument("class_priors: empty train set");
  priors.pi.resize(static_cast<std::size_t>(n_classes));
  for (std::int32_t c = 0; c < n_classes; ++c) {
    const std::int64_t cnt = priors.source_counts[static_cast<std::size_t>(c)];
    if (cnt == 0)
      throw std::invalid_argument("class_priors: class " + std::to_string(c) + " absent from train");
    priors.pi[static_cast<std::size_t>(c)] = static_cast<double>(cnt) / static_cast<double>(total);
  }
  return priors;
}

namespace {

// Shared core: optional per-class logit offset, then mean (weighted) NLL.
ValueId offset_nll(Tape& tape, ValueId logits, const std::vector<std::int32_t>& labels,
                   const std::vector<double>* class_offsets, std::vector<double> weights) {
  const Tensor& lv = tape.value(logits);
  if (lv.rows() == 0) throw std::invalid_argument("loss: empty train set");
  if (static_cast<std::int64_t>(labels.size()) != lv.rows())
    throw std::invalid_argument("loss: labels length != logit rows");
  ValueId shifted = logits;
  if (class_offsets != nullptr) {
    if (static_cast<std::int64_t>(class_offsets->size()) != lv.cols())
      throw std::invalid_argument("loss: offset length != n_classes");
    Tensor tile(lv.rows(), lv.cols());
    for (std::int64_t i = 0; i < lv.rows(); ++i) {
      for (std::int64_t j = 0; j < lv.cols(); ++j)
        tile(i, j) = (*class_offsets)[static_cast<std::size_t>(j)];
    }
    shifted = tape.add(logits, tape.constant(std::move(tile)));
  }
  ValueId logp = tape.log_softmax_rows(shifted);
  return tape.picked_neg_mean(logp, labels, std::move(weights));
}

}  // namespace

ValueId cross_entropy(Tape& tape, ValueId logits, const std::vector<std::int32_t>& labels) {
  return offset_nll(tape, logits, labels, nullptr, std::vector<double>(labels.size(), 1.0));
}

ValueId reweighted_cross_entropy(Tape& tape, ValueId logits, const std::vector<std::int32_t>& labels,
                                 const std::vector<std::int64_t>& counts) {
  const auto m = static_cast<double>(counts.size());
  double total = 0.0;
  for (std::int64_t c : counts) {
    if (c <= 0) throw std::invalid_argument("reweighted_cross_entropy: zero class count");
    total += static_cast<double>(c);
  }
  std::vector<double> weights(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    weights[i] = (total / m) / static_cast<double>(counts[static_cast<std::size_t>(labels[i])]);
  }
  return offset_nll(tape, logits, labels, nullptr, std::move(weights));
}

ValueId logit_adjusted_loss(Tape& tape, ValueId logits, const std::vector<std::int32_t>& labels,
                            const ClassPriors& priors, double tau) {
  std::vector<double> offsets(priors.pi.size());
  for (std::size_t c = 0; c < priors.pi.size(); ++c) {
    if (priors.pi[c] <= 0.0) throw std::invalid_argument("logit_adjusted_loss: zero prior");
    offsets[c] = tau * std::log(priors.pi[c]);
  }
  return offset_nll(tape, logits, labels, &offsets, std::vector<double>(labels.size(), 1.0));
}

ValueId balanced_softmax_loss(Tape& tape, ValueId logits, const std::vector<std::int32_t>& labels,
                              const std::vector<std::int64_t>& counts) {
  std::vector<double> offsets(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] <= 0) throw std::invalid_argument("balanced_softmax_loss: zero class count");
    offsets[c] = std::log(static_cast<double>(counts[c]));
  }
  return offset_nll(tape, logits, labels, &offsets, std::vector<double>(labels.size(), 1.0));
}

ValueId gate_consistency_loss(Tape& tape, ValueId gate_logits, const Graph& g,
                              const std::vector<std::uint8_t>& train_mask) {
  if (static_cast<std::int64_t>(train_mask.size()) != g.n_nodes)
    throw std::invalid_argument("gate_consistency_loss: mask size mismatch");
  const std::int64_t n_dir = g.n_edge_directions();
  std::vector<double> targets(static_cast<std::size_t>(n_dir), 0.0);
  std::vector<std::uint8_t> select(static_cast<std::size_t>(n_dir), 0);
  std::int64_t qualifying = 0;
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (!train_mask[static_cast<std::size_t>(i)]) continue;
    for (std::int64_t e = g.csr_offsets[i]; e < g.csr_offsets[i + 1]; ++e) {
      const std::int32_t j = g.csr_neighbors[e];
      if (!train_mask[static_cast<std::size_t>(j)]) continue;
      select[static_cast<std::size_t>(e)] = 1;
      targets[static_cast<std::size_t>(e)] =
          g.labels[static_cast<std::size_t>(i)] == g.labels[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
      ++qualifying;
    }
  }
  if (qualifying == 0) return tape.constant(Tensor(1, 1));
  return tape.bce_logits_mean(gate_logits, std::move(targets), std::move(select));
}

ValueId total_loss(Tape& tape, const ModelConfig& cfg, ValueId l_im,
                   const std::vector<ValueId>& gate_losses) {
  if (cfg.lambda < 0.0) throw std::invalid_argument("total_loss: lambda must be >= 0");
  if (cfg.gate_mode != GateMode::Learned) {
    if (!gate_losses.empty())
      throw std::invalid_argument("total_loss: gate losses only apply in Learned mode");
    return l_im;
  }
  ValueId total = l_im;
  if (!gate_losses.empty()) {
    ValueId gate_sum = gate_losses.front();
    for (std::size_t l = 1; l < gate_losses.size(); ++l) gate_sum = tape.add(gate_sum, gate_losses[l]);
    total = tape.add(total, tape.scale(gate_sum, cfg.lambda));
  }
  return total;
}

ValueId imbalance_loss(Tape& tape, const ModelConfig& cfg, ValueId train_logits,
                       const std::vector<std::int32_t>& train_labels,
                       const std::vector<std::int64_t>& train_counts) {
  switch (cfg.loss_kind) {
    case LossKind::CrossEntropy:
      return cross_entropy(tape, train_logits, train_labels);
    case LossKind::ReweightedCE:
      return reweighted_cross_entropy(tape, train_logits, train_labels, train_counts);
    case LossKind::LogitAdjusted: {
      ClassPriors priors;
      priors.source_counts = train_counts;
      std::int64_t total = 0;
      for (std::int64_t c : train_counts) {
        if (c <= 0) throw std::invalid_argument("imbalance_loss: class absent from train");
        total += c;
      }
      priors.pi.resize(train_counts.size());
      for (std::size_t c = 0; c < train_counts.size(); ++c)
        priors.pi[c] = static_cast<double>(train_counts[c]) / static_cast<double>(total);
      return logit_adjusted_loss(tape, train_logits, train_labels, priors, cfg.tau);
    }
    case LossKind::BalancedSoftmax:
      return balanced_softmax_loss(tape, train_logits, train_labels, train_counts);
  }
  throw std::logic_error("imbalance_loss: unreachable");
}

}  // namespace imgbk
