#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "imgbk/errors.hpp"
#include "imgbk/synthgen.hpp"
#include "imgbk/training.hpp"
#include "test_support.hpp"

using namespace imgbk;

namespace {

// Well-separated two-class SBM: linearly separable features plus strong
// community structure.
DatasetBundle separable_bundle(std::uint64_t seed = 0) {
  SbmSpec spec;
  spec.class_sizes = {120, 80};
  spec.p_in = {0.15, 0.15};
  spec.p_out = 0.01;
  spec.feature_dim = 8;
  spec.class_mean_separation = 1.5;
  spec.noise_std = 0.5;
  spec.seed = seed;
  return sbm_generate(spec);
}

TrainConfig gcn_config(const DatasetBundle& b, std::int64_t hidden = 16) {
  TrainConfig cfg;
  cfg.model.layer_sizes = {b.graph.feature_dim(), hidden, b.graph.n_classes};
  cfg.model.gate_mode = GateMode::None;
  cfg.epochs = 500;
  cfg.early_stop_patience = 150;
  cfg.seed = 0;
  return cfg;
}

}  // namespace

TEST_CASE("gcn reaches high accuracy on a separable graph within 100 epochs") {
  SbmSpec spec;
  spec.class_sizes = {120, 80};
  spec.p_in = {0.2, 0.2};
  spec.p_out = 0.005;
  spec.feature_dim = 8;
  spec.class_mean_separation = 2.5;
  spec.noise_std = 0.4;
  spec.seed = 0;
  DatasetBundle b = sbm_generate(spec);
  TrainConfig cfg = gcn_config(b);
  cfg.epochs = 100;
  cfg.early_stop_patience = 100;
  cfg.lr = 0.01;
  TrainResult res = train(b, cfg);
  MetricsReport rep = evaluate(res.params, b, cfg.model, b.masks.test);
  CHECK(rep.accuracy >= 0.95);
}

TEST_CASE("training history is bitwise reproducible") {
  DatasetBundle b = separable_bundle(1);
  TrainConfig cfg = gcn_config(b);
  cfg.epochs = 12;
  cfg.early_stop_patience = 50;
  TrainResult r1 = train(b, cfg);
  TrainResult r2 = train(b, cfg);
  REQUIRE(r1.history.records.size() == r2.history.records.size());
  for (std::size_t e = 0; e < r1.history.records.size(); ++e) {
    CHECK(r1.history.records[e].train_loss == r2.history.records[e].train_loss);
    CHECK(r1.history.records[e].val_accuracy == r2.history.records[e].val_accuracy);
    CHECK(r1.history.records[e].val_macro_f1 == r2.history.records[e].val_macro_f1);
  }
  for (const auto& [name, p] : r1.params.items()) CHECK(p.value == r2.params.at(name).value);
}

TEST_CASE("returned parameters are the best-val checkpoint") {
  DatasetBundle b = separable_bundle(2);
  TrainConfig cfg = gcn_config(b);
  cfg.epochs = 30;
  cfg.early_stop_patience = 8;
  TrainResult res = train(b, cfg);

  double best = 0.0;
  for (const auto& rec : res.history.records) best = std::max(best, rec.val_macro_f1);
  CHECK(res.history.best_val_macro_f1 == best);

  MetricsReport val = evaluate(res.params, b, cfg.model, b.masks.val);
  CHECK(val.macro_f1 == best);  // evaluation is deterministic, so exact
}

TEST_CASE("early stopping halts after patience runs out") {
  DatasetBundle b = separable_bundle(3);
  TrainConfig cfg = gcn_config(b);
  cfg.epochs = 200;
  cfg.early_stop_patience = 5;
  TrainResult res = train(b, cfg);
  CHECK(static_cast<std::int64_t>(res.history.records.size()) < 200);
  CHECK(res.history.best_epoch + 5 + 1 >=
        static_cast<std::int64_t>(res.history.records.size()));
}

TEST_CASE("training works in every gate mode") {
  DatasetBundle b = separable_bundle(4);
  for (GateMode mode : {GateMode::Learned, GateMode::Fast}) {
    TrainConfig cfg = gcn_config(b, 8);
    cfg.model.gate_mode = mode;
    cfg.model.loss_kind = LossKind::BalancedSoftmax;
    TrainResult res = train(b, cfg);
    MetricsReport rep = evaluate(res.params, b, cfg.model, b.masks.test);
    CHECK(rep.accuracy > 0.85);
  }
}

TEST_CASE("non-finite forward aborts with the epoch index") {
  // an absurd learning rate blows the weights up; the identity-activation
  // product of two huge layers overflows on the next forward
  SbmSpec spec;
  spec.class_sizes = {20, 20};
  spec.p_in = {0.3, 0.3};
  spec.p_out = 0.1;
  spec.feature_dim = 4;
  spec.seed = 5;
  DatasetBundle b = sbm_generate(spec);
  TrainConfig cfg;
  cfg.model.layer_sizes = {4, 4, 2};
  cfg.model.activation = Activation::Identity;
  cfg.lr = 1e300;
  cfg.epochs = 5;
  try {
    train(b, cfg);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("diverged at epoch") != std::string::npos);
  }
}

TEST_CASE("evaluate rejects an empty mask") {
  DatasetBundle b = separable_bundle(6);
  TrainConfig cfg = gcn_config(b);
  cfg.epochs = 2;
  TrainResult res = train(b, cfg);
  std::vector<std::uint8_t> empty(static_cast<std::size_t>(b.graph.n_nodes), 0);
  CHECK_THROWS_AS(evaluate(res.params, b, cfg.model, empty), std::invalid_argument);
}

TEST_CASE("benchmark orders gcn below the learned gate model") {
  SbmSpec spec;
  spec.class_sizes = {200, 200};
  spec.p_in = {0.06, 0.06};
  spec.p_out = 0.01;
  spec.feature_dim = 32;
  spec.seed = 7;
  DatasetBundle b = sbm_generate(spec);

  TrainConfig gcn = gcn_config(b, 32);
  TrainConfig learned = gcn;
  learned.model.gate_mode = GateMode::Learned;

  auto rows = benchmark_epoch_time(b, {{"gcn", gcn}, {"im-gbk", learned}}, 1, 3);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mean_s_per_epoch < rows[1].mean_s_per_epoch);

  // ordering is stable across invocations
  auto rows2 = benchmark_epoch_time(b, {{"gcn", gcn}, {"im-gbk", learned}}, 1, 3);
  CHECK(rows2[0].mean_s_per_epoch < rows2[1].mean_s_per_epoch);

  CHECK_THROWS_AS(benchmark_epoch_time(b, {{"gcn", gcn}}, 1, 2), std::invalid_argument);
}

TEST_CASE("lambda sweep emits one row per lambda and needs the learned gate") {
  SbmSpec spec;
  spec.class_sizes = {40, 40};
  spec.p_in = {0.2, 0.2};
  spec.p_out = 0.05;
  spec.feature_dim = 4;
  spec.class_mean_separation = 2.0;
  spec.seed = 8;
  DatasetBundle b = sbm_generate(spec);

  TrainConfig cfg = gcn_config(b, 4);
  cfg.model.gate_mode = GateMode::Learned;
  cfg.epochs = 3;
  auto rows = lambda_sweep(b, cfg, {0.0, 0.5, 1.0}, {0, 1});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].lambda == 0.0);
  CHECK(rows[2].lambda == 1.0);
  for (const auto& r : rows) {
    CHECK(r.f1_mean >= 0.0);
    CHECK(r.f1_mean <= 1.0);
  }

  TrainConfig bad = gcn_config(b, 4);
  CHECK_THROWS_AS(lambda_sweep(b, bad, {0.0}, {0}), std::invalid_argument);
}

TEST_CASE("writers emit the documented headers") {
  auto dir = std::filesystem::temp_directory_path() / "imgbk_test_writers";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  History h;
  h.records.push_back(EpochRecord{0, 1.5, 0.5, 0.4, 0.01});
  write_history_csv(h, dir / "history.csv");
  std::ifstream in(dir / "history.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,train_loss,val_accuracy,val_macro_f1,seconds");

  write_timing_csv({BenchRow{"gcn", 0.5, 0.01}}, dir / "timing.csv");
  std::ifstream tin(dir / "timing.csv");
  std::getline(tin, line);
  CHECK(line == "model,mean_s_per_epoch,std");

  MetricsReport rep;
  rep.confusion = {{1, 0}, {0, 1}};
  rep.per_class_f1 = {1.0, 1.0};
  write_metrics_json(rep, dir / "metrics.json");
  CHECK(std::filesystem::exists(dir / "metrics.json"));
}
