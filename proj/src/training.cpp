#include "imgbk/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "imgbk/errors.hpp"

namespace imgbk {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::int64_t> mask_indices(const std::vector<std::uint8_t>& mask) {
  std::vector<std::int64_t> idx;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) idx.push_back(static_cast<std::int64_t>(i));
  }
  return idx;
}

std::vector<std::int32_t> gather_labels(const Graph& g, const std::vector<std::int64_t>& idx) {
  std::vector<std::int32_t> out(idx.size());
  for (std::size_t t = 0; t < idx.size(); ++t)
    out[t] = g.labels[static_cast<std::size_t>(idx[t])];
  return out;
}

std::vector<std::int64_t> train_class_counts(const Graph& g, const std::vector<std::int32_t>& labels) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(g.n_classes), 0);
  for (std::int32_t y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

// One optimization step; returns the scalar loss before the update.
double train_step(const DatasetBundle& bundle, const TrainConfig& cfg, ParamStore& store,
                  const GateTable* table, const std::vector<std::int64_t>& train_idx,
                  const std::vector<std::int32_t>& train_labels,
                  const std::vector<std::int64_t>& counts) {
  Tape tape;
  TapeBinding binding{tape, store, {}};
  ForwardResult fwd = model_forward(binding, bundle.graph, cfg.model, table);
  ValueId train_logits = tape.select_rows(fwd.logits, train_idx);
  ValueId l_im = imbalance_loss(tape, cfg.model, train_logits, train_labels, counts);
  std::vector<ValueId> gate_losses;
  for (ValueId gate_logits : fwd.gate_logits)
    gate_losses.push_back(gate_consistency_loss(tape, gate_logits, bundle.graph, bundle.masks.train));
  ValueId loss = total_loss(tape, cfg.model, l_im, gate_losses);
  const double loss_value = tape.value(loss)(0, 0);
  tape.backward(loss);
  store.zero_grad();
  binding.copy_grads_to_store();
  adam_step(store, cfg.lr, cfg.weight_decay);
  return loss_value;
}

Tensor forward_scores(ParamStore& store, const DatasetBundle& bundle, const ModelConfig& cfg,
                      const GateTable* table) {
  Tape tape;
  TapeBinding binding{tape, store, {}};
  ForwardResult fwd = model_forward(binding, bundle.graph, cfg, table);
  return softmax_rows(tape.value(fwd.logits));
}

MetricsReport metrics_on_mask(const Tensor& scores, const DatasetBundle& bundle,
                              const std::vector<std::uint8_t>& mask) {
  auto idx = mask_indices(mask);
  if (idx.empty()) throw std::invalid_argument("evaluate: empty mask");
  Tensor sel = select_rows(scores, idx);
  auto truth = gather_labels(bundle.graph, idx);
  return compute_metrics(sel, truth, bundle.graph.n_classes);
}

}  // namespace

TrainResult train(const DatasetBundle& bundle, const TrainConfig& cfg) {
  cfg.model.validate();
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.lr <= 0.0) throw std::invalid_argument("train: lr must be positive");

  const auto train_idx = mask_indices(bundle.masks.train);
  if (train_idx.empty()) throw std::invalid_argument("train: empty train mask");
  const auto train_labels = gather_labels(bundle.graph, train_idx);
  const auto counts = train_class_counts(bundle.graph, train_labels);

  GateTable table;
  const GateTable* table_ptr = nullptr;
  if (cfg.model.gate_mode == GateMode::Fast) {
    table = fast_gate_table(bundle.graph, bundle.masks, cfg.model.epsilon,
                            cfg.model.fast_gate_train_only_homophily);
    table_ptr = &table;
  }

  TrainResult result;
  result.model = cfg.model;
  ParamStore store = init_model_params(cfg.model, cfg.seed);
  ParamStore best = store;
  std::int64_t since_best = 0;

  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = Clock::now();
    double loss_value;
    MetricsReport val;
    try {
      loss_value = train_step(bundle, cfg, store, table_ptr, train_idx, train_labels, counts);
      if (!std::isfinite(loss_value))
        throw NumericalError("non-finite loss");
      Tensor scores = forward_scores(store, bundle, cfg.model, table_ptr);
      val = metrics_on_mask(scores, bundle, bundle.masks.val);
    } catch (const NumericalError& e) {
      throw NumericalError("train: diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_value;
    rec.val_accuracy = val.accuracy;
    rec.val_macro_f1 = val.macro_f1;
    rec.seconds = seconds_since(start);
    result.history.records.push_back(rec);

    if (result.history.best_epoch < 0 || val.macro_f1 > result.history.best_val_macro_f1) {
      result.history.best_epoch = epoch;
      result.history.best_val_macro_f1 = val.macro_f1;
      best = store;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }

  result.params = std::move(best);
  return result;
}

MetricsReport evaluate(ParamStore& params, const DatasetBundle& bundle, const ModelConfig& cfg,
                       const std::vector<std::uint8_t>& mask) {
  GateTable table;
  const GateTable* table_ptr = nullptr;
  if (cfg.gate_mode == GateMode::Fast) {
    table = fast_gate_table(bundle.graph, bundle.masks, cfg.epsilon,
                            cfg.fast_gate_train_only_homophily);
    table_ptr = &table;
  }
  Tensor scores = forward_scores(params, bundle, cfg, table_ptr);
  return metrics_on_mask(scores, bundle, mask);
}

std::vector<BenchRow> benchmark_epoch_time(const DatasetBundle& bundle,
                                           const std::vector<std::pair<std::string, TrainConfig>>& cfgs,
                                           std::int64_t warmup, std::int64_t measured) {
  if (measured < 3) throw std::invalid_argument("benchmark_epoch_time: need >= 3 measured epochs");
  std::vector<BenchRow> rows;
  for (const auto& [name, cfg] : cfgs) {
    const auto train_idx = mask_indices(bundle.masks.train);
    const auto train_labels = gather_labels(bundle.graph, train_idx);
    const auto counts = train_class_counts(bundle.graph, train_labels);
    GateTable table;
    const GateTable* table_ptr = nullptr;
    if (cfg.model.gate_mode == GateMode::Fast) {
      table = fast_gate_table(bundle.graph, bundle.masks, cfg.model.epsilon,
                              cfg.model.fast_gate_train_only_homophily);
      table_ptr = &table;
    }
    ParamStore store = init_model_params(cfg.model, cfg.seed);
    for (std::int64_t e = 0; e < warmup; ++e)
      train_step(bundle, cfg, store, table_ptr, train_idx, train_labels, counts);
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(measured));
    for (std::int64_t e = 0; e < measured; ++e) {
      const auto start = Clock::now();
      train_step(bundle, cfg, store, table_ptr, train_idx, train_labels, counts);
      times.push_back(seconds_since(start));
    }
    double mean = 0.0;
    for (double t : times) mean += t;
    mean /= static_cast<double>(times.size());
    double var = 0.0;
    for (double t : times) var += (t - mean) * (t - mean);
    var /= static_cast<double>(times.size());
    rows.push_back(BenchRow{name, mean, std::sqrt(var)});
  }
  return rows;
}

std::vector<SweepRow> lambda_sweep(const DatasetBundle& bundle, const TrainConfig& base,
                                   const std::vector<double>& lambdas,
                                   const std::vector<std::uint64_t>& seeds) {
  if (base.model.gate_mode != GateMode::Learned)
    throw std::invalid_argument("lambda_sweep: requires Learned gate mode");
  if (seeds.empty()) throw std::invalid_argument("lambda_sweep: need at least one seed");
  std::vector<SweepRow> rows;
  for (double lambda : lambdas) {
    TrainConfig cfg = base;
    cfg.model.lambda = lambda;
    std::vector<double> accs, aucs, f1s;
    for (std::uint64_t seed : seeds) {
      cfg.seed = seed;
      TrainResult res = train(bundle, cfg);
      MetricsReport rep = evaluate(res.params, bundle, cfg.model, bundle.masks.test);
      accs.push_back(rep.accuracy);
      aucs.push_back(rep.auc_ovr_macro);
      f1s.push_back(rep.macro_f1);
    }
    auto mean_std = [](const std::vector<double>& xs) {
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      var /= static_cast<double>(xs.size());
      return std::pair<double, double>{mean, std::sqrt(var)};
    };
    SweepRow row;
    row.lambda = lambda;
    std::tie(row.acc_mean, row.acc_std) = mean_std(accs);
    std::tie(row.auc_mean, row.auc_std) = mean_std(aucs);
    std::tie(row.f1_mean, row.f1_std) = mean_std(f1s);
    rows.push_back(row);
  }
  return rows;
}

void write_history_csv(const History& history, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,train_loss,val_accuracy,val_macro_f1,seconds\n";
  out.precision(17);
  for (const auto& r : history.records) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_accuracy << ',' << r.val_macro_f1 << ','
        << r.seconds << '\n';
  }
}

void write_metrics_json(const MetricsReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["accuracy"] = report.accuracy;
  j["macro_f1"] = report.macro_f1;
  j["auc_ovr_macro"] = report.auc_ovr_macro;
  j["confusion"] = report.confusion;
  j["per_class_f1"] = report.per_class_f1;
  j["n"] = report.n;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void write_timing_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "model,mean_s_per_epoch,std\n";
  out.precision(17);
  for (const auto& r : rows) out << r.model << ',' << r.mean_s_per_epoch << ',' << r.std_s_per_epoch << '\n';
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "lambda,acc_mean,acc_std,auc_mean,auc_std,f1_mean,f1_std\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.lambda << ',' << r.acc_mean << ',' << r.acc_std << ',' << r.auc_mean << ',' << r.auc_std
        << ',' << r.f1_mean << ',' << r.f1_std << '\n';
  }
}

}  // namespace imgbk
