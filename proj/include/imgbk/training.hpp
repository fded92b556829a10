#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "imgbk/graph.hpp"
#include "imgbk/loss.hpp"
#include "imgbk/metrics.hpp"
#include "imgbk/model.hpp"
#include "imgbk/optim.hpp"

namespace imgbk {

struct TrainConfig {
  std::int64_t epochs = 200;
  double lr = 0.001;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  std::int64_t early_stop_patience = 50;  // epochs without val macro-F1 improvement
  ModelConfig model;
};

struct EpochRecord {
  std::int64_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_macro_f1 = 0.0;
  double seconds = 0.0;  // wall clock; excluded from determinism guarantees
};

struct History {
  std::vector<EpochRecord> records;
  std::int64_t best_epoch = -1;
  double best_val_macro_f1 = 0.0;
};

struct TrainResult {
  ParamStore params;  // parameters from the best-val-macro-F1 epoch
  History history;
  ModelConfig model;
};

// Full-batch training with Adam and best-checkpoint early stopping.
// Deterministic for a fixed seed: loss and metric sequences are bitwise
// reproducible. Throws NumericalError with the epoch index on divergence.
TrainResult train(const DatasetBundle& bundle, const TrainConfig& cfg);

// Forward with the given parameters; metrics over nodes selected by mask.
MetricsReport evaluate(ParamStore& params, const DatasetBundle& bundle, const ModelConfig& cfg,
                       const std::vector<std::uint8_t>& mask);

struct BenchRow {
  std::string model;
  double mean_s_per_epoch = 0.0;
  double std_s_per_epoch = 0.0;
};

// Mean wall-clock seconds per training step (forward+loss+backward+Adam),
// `measured` epochs after `warmup` epochs, no evaluation in the loop.
std::vector<BenchRow> benchmark_epoch_time(const DatasetBundle& bundle,
                                           const std::vector<std::pair<std::string, TrainConfig>>& cfgs,
                                           std::int64_t warmup, std::int64_t measured);

struct SweepRow {
  double lambda = 0.0;
  double acc_mean = 0.0, acc_std = 0.0;
  double auc_mean = 0.0, auc_std = 0.0;
  double f1_mean = 0.0, f1_std = 0.0;
};

// One train/evaluate per (lambda, seed) on the test mask; Learned mode only.
std::vector<SweepRow> lambda_sweep(const DatasetBundle& bundle, const TrainConfig& base,
                                   const std::vector<double>& lambdas,
                                   const std::vector<std::uint64_t>& seeds);

void write_history_csv(const History& history, const std::filesystem::path& path);
void write_metrics_json(const MetricsReport& report, const std::filesystem::path& path);
void write_timing_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace imgbk
