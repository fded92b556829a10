// imgbk command-line tool: analyze / train / bench / sweep-lambda / generate / rerun.
// Exit codes: 0 success, 2 usage, 3 data error, 4 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "imgbk/analysis.hpp"
#include "imgbk/errors.hpp"
#include "imgbk/graph.hpp"
#include "imgbk/model.hpp"
#include "imgbk/optim.hpp"
#include "imgbk/synthgen.hpp"
#include "imgbk/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  std::string dataset_dir;
  std::string model = "gcn";
  std::string loss = "ce";
  double lambda = 1.0;
  bool lambda_given = false;
  double epsilon = 0.1;
  double tau = 1.0;
  std::uint64_t seed = 0;
  std::int64_t hidden = 128;
  std::int64_t epochs = 200;
  std::int64_t patience = 50;
  double lr = 0.001;
  double weight_decay = 5e-4;
  std::string fast_hg = "train";
  std::string extreme;  // "classes=1,2,k=5"
  std::uint64_t extreme_seed = 0;
  std::string out_dir = "run";
};

imgbk::LossKind parse_loss(const std::string& s) {
  if (s == "ce") return imgbk::LossKind::CrossEntropy;
  if (s == "reweight") return imgbk::LossKind::ReweightedCE;
  if (s == "logit-adj") return imgbk::LossKind::LogitAdjusted;
  if (s == "balanced") return imgbk::LossKind::BalancedSoftmax;
  throw UsageError("unknown loss: " + s);
}

imgbk::GateMode gate_mode_for_model(const std::string& model) {
  if (model == "gcn") return imgbk::GateMode::None;
  if (model == "gbk" || model == "im-gbk") return imgbk::GateMode::Learned;
  if (model == "fast-im-gbk") return imgbk::GateMode::Fast;
  throw UsageError("unknown model: " + model);
}

struct ExtremeSpec {
  std::vector<std::int32_t> classes;
  std::int64_t k = 5;
};

// Accepts "classes=1,2,k=5", "1,2,k=5", or "1,2".
ExtremeSpec parse_extreme(const std::string& text) {
  ExtremeSpec spec;
  std::string body = text;
  if (body.rfind("classes=", 0) == 0) body = body.substr(8);
  std::size_t start = 0;
  while (start <= body.size()) {
    std::size_t comma = body.find(',', start);
    std::string tok = body.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!tok.empty()) {
      if (tok.rfind("k=", 0) == 0) {
        spec.k = std::stoll(tok.substr(2));
      } else {
        spec.classes.push_back(static_cast<std::int32_t>(std::stol(tok)));
      }
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (spec.classes.empty()) throw UsageError("--extreme needs at least one class id");
  if (spec.k <= 0) throw UsageError("--extreme k must be positive");
  return spec;
}

imgbk::DatasetBundle load_bundle_for_cli(const std::string& dir) {
  if (!fs::exists(dir) || !fs::exists(fs::path(dir) / "meta.json"))
    throw UsageError("not a dataset directory (no meta.json): " + dir);
  return imgbk::load_dataset(dir);
}

void apply_extreme(imgbk::DatasetBundle& bundle, const std::string& extreme, std::uint64_t seed) {
  if (extreme.empty()) return;
  ExtremeSpec spec = parse_extreme(extreme);
  bundle.masks = imgbk::make_extreme_split(bundle.graph, bundle.masks, spec.classes, spec.k, seed);
}

imgbk::TrainConfig build_train_config(const TrainOptions& opt, const imgbk::DatasetBundle& bundle) {
  if (opt.model == "gcn" && opt.lambda_given)
    throw UsageError("--lambda does not apply to the gcn model");
  if (opt.model == "fast-im-gbk" && opt.lambda_given)
    std::cerr << "warning: fast-im-gbk has no gate loss; --lambda ignored\n";

  imgbk::TrainConfig cfg;
  cfg.epochs = opt.epochs;
  cfg.lr = opt.lr;
  cfg.weight_decay = opt.weight_decay;
  cfg.seed = opt.seed;
  cfg.early_stop_patience = opt.patience;
  cfg.model.layer_sizes = {bundle.graph.feature_dim(), opt.hidden, bundle.graph.n_classes};
  cfg.model.gate_mode = gate_mode_for_model(opt.model);
  cfg.model.loss_kind = parse_loss(opt.loss);
  cfg.model.lambda = opt.lambda;
  cfg.model.epsilon = opt.epsilon;
  cfg.model.tau = opt.tau;
  cfg.model.fast_gate_train_only_homophily = opt.fast_hg != "all";
  if (opt.fast_hg != "train" && opt.fast_hg != "all")
    throw UsageError("--fast-hg must be 'train' or 'all'");
  cfg.model.validate();
  return cfg;
}

json train_config_to_json(const imgbk::TrainConfig& cfg) {
  json j;
  j["epochs"] = cfg.epochs;
  j["lr"] = cfg.lr;
  j["weight_decay"] = cfg.weight_decay;
  j["seed"] = cfg.seed;
  j["early_stop_patience"] = cfg.early_stop_patience;
  j["model"] = imgbk::model_config_to_json(cfg.model);
  return j;
}

imgbk::TrainConfig train_config_from_json(const json& j) {
  imgbk::TrainConfig cfg;
  cfg.epochs = j.at("epochs").get<std::int64_t>();
  cfg.lr = j.at("lr").get<double>();
  cfg.weight_decay = j.at("weight_decay").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.early_stop_patience = j.at("early_stop_patience").get<std::int64_t>();
  cfg.model = imgbk::model_config_from_json(j.at("model"));
  return cfg;
}

void write_manifest(const json& manifest, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "run_manifest.json", std::ios::binary);
  if (!out) throw imgbk::DataError("cannot write manifest in " + out_dir.string());
  out << manifest.dump(2) << "\n";
}

void save_model_checkpoint(const imgbk::ParamStore& params, const imgbk::ModelConfig& cfg,
                           const fs::path& path) {
  // model checkpoint = parameter checkpoint + serialized config
  json j;
  j["version"] = 1;
  j["model_config"] = imgbk::model_config_to_json(cfg);
  json p = json::object();
  for (const auto& [name, param] : params.items()) {
    json entry;
    entry["shape"] = {param.value.rows(), param.value.cols()};
    entry["data"] = std::vector<double>(param.value.data(), param.value.data() + param.value.size());
    p[name] = std::move(entry);
  }
  j["params"] = std::move(p);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw imgbk::DataError("cannot write checkpoint: " + path.string());
  out << j.dump() << "\n";
}

int run_analyze(const std::string& dataset_dir, const std::string& out_dir) {
  imgbk::DatasetBundle bundle = load_bundle_for_cli(dataset_dir);
  imgbk::ClassStats stats = imgbk::profile(bundle);
  imgbk::write_profile(stats, bundle, out_dir);
  std::cout << "name: " << bundle.name << "\n"
            << "nodes: " << bundle.graph.n_nodes << "\n"
            << "edges (undirected): " << bundle.graph.n_edges << "\n"
            << "edges (directions): " << bundle.graph.n_edge_directions() << "\n"
            << "features: " << bundle.graph.feature_dim() << "\n"
            << "classes: " << bundle.graph.n_classes << "\n"
            << "imbalance ratio: " << stats.imbalance_ratio << "\n"
            << "hom ratio (edge): " << stats.graph_homophily << "\n"
            << "hom ratio (node mean): " << stats.node_homophily << "\n";
  std::cout << "wrote " << (fs::path(out_dir) / "stats.json").string() << " and per_class.csv\n";
  return kExitOk;
}

int run_train_with_config(const imgbk::DatasetBundle& bundle, const imgbk::TrainConfig& cfg,
                          const json& manifest, const fs::path& out_dir) {
  write_manifest(manifest, out_dir);  // before training starts
  imgbk::TrainResult result = imgbk::train(bundle, cfg);
  imgbk::MetricsReport report =
      imgbk::evaluate(result.params, bundle, cfg.model, bundle.masks.test);
  imgbk::write_history_csv(result.history, out_dir / "history.csv");
  imgbk::write_metrics_json(report, out_dir / "metrics.json");
  save_model_checkpoint(result.params, cfg.model, out_dir / "checkpoint.json");
  std::cout << "best epoch: " << result.history.best_epoch << "\n"
            << "test accuracy: " << report.accuracy << "\n"
            << "test macro-F1: " << report.macro_f1 << "\n"
            << "test AUC (OvR macro): " << report.auc_ovr_macro << "\n"
            << "outputs in " << out_dir.string() << "\n";
  return kExitOk;
}

int run_train(const TrainOptions& opt) {
  imgbk::DatasetBundle bundle = load_bundle_for_cli(opt.dataset_dir);
  apply_extreme(bundle, opt.extreme, opt.extreme_seed);
  imgbk::TrainConfig cfg = build_train_config(opt, bundle);

  json manifest;
  manifest["kind"] = "train";
  manifest["tool_version"] = kToolVersion;
  manifest["dataset_dir"] = fs::absolute(opt.dataset_dir).string();
  manifest["dataset_checksum"] = imgbk::dataset_checksum(opt.dataset_dir);
  manifest["extreme"] = opt.extreme;
  manifest["extreme_seed"] = opt.extreme_seed;
  manifest["seeds"] = std::vector<std::uint64_t>{cfg.seed};
  manifest["config"] = train_config_to_json(cfg);
  return run_train_with_config(bundle, cfg, manifest, opt.out_dir);
}

int run_bench(const std::string& dataset_dir, std::vector<std::string> models,
              std::int64_t repeats, std::int64_t warmup, std::int64_t hidden,
              const std::string& loss, std::uint64_t seed, const std::string& out_dir) {
  imgbk::DatasetBundle bundle = load_bundle_for_cli(dataset_dir);
  if (models.empty()) models = {"gcn", "fast-im-gbk", "im-gbk"};

  std::vector<std::pair<std::string, imgbk::TrainConfig>> cfgs;
  for (const std::string& model : models) {
    TrainOptions opt;
    opt.model = model;
    opt.loss = loss;
    opt.seed = seed;
    opt.hidden = hidden;
    cfgs.emplace_back(model, build_train_config(opt, bundle));
  }

  json manifest;
  manifest["kind"] = "bench";
  manifest["tool_version"] = kToolVersion;
  manifest["dataset_dir"] = fs::absolute(dataset_dir).string();
  manifest["dataset_checksum"] = imgbk::dataset_checksum(dataset_dir);
  manifest["models"] = models;
  manifest["repeats"] = repeats;
  manifest["warmup"] = warmup;
  manifest["seeds"] = std::vector<std::uint64_t>{seed};
  write_manifest(manifest, out_dir);

  auto rows = imgbk::benchmark_epoch_time(bundle, cfgs, warmup, repeats);
  imgbk::write_timing_csv(rows, fs::path(out_dir) / "timing.csv");
  std::cout << "model,mean_s_per_epoch,std\n";
  for (const auto& r : rows)
    std::cout << r.model << ',' << r.mean_s_per_epoch << ',' << r.std_s_per_epoch << "\n";
  return kExitOk;
}

int run_sweep(const TrainOptions& opt, double lambda_max, double lambda_step,
              const std::vector<std::uint64_t>& seeds) {
  imgbk::DatasetBundle bundle = load_bundle_for_cli(opt.dataset_dir);
  apply_extreme(bundle, opt.extreme, opt.extreme_seed);
  TrainOptions base = opt;
  if (base.model == "gcn" || base.model == "fast-im-gbk")
    throw UsageError("sweep-lambda requires a learned-gate model (gbk or im-gbk)");
  imgbk::TrainConfig cfg = build_train_config(base, bundle);

  std::vector<double> lambdas;
  for (double l = 0.0; l <= lambda_max + 1e-9; l += lambda_step) lambdas.push_back(l);

  json manifest;
  manifest["kind"] = "sweep-lambda";
  manifest["tool_version"] = kToolVersion;
  manifest["dataset_dir"] = fs::absolute(opt.dataset_dir).string();
  manifest["dataset_checksum"] = imgbk::dataset_checksum(opt.dataset_dir);
  manifest["extreme"] = opt.extreme;
  manifest["extreme_seed"] = opt.extreme_seed;
  manifest["lambdas"] = lambdas;
  manifest["seeds"] = seeds;
  manifest["config"] = train_config_to_json(cfg);
  write_manifest(manifest, opt.out_dir);

  auto rows = imgbk::lambda_sweep(bundle, cfg, lambdas, seeds);
  imgbk::write_sweep_csv(rows, fs::path(opt.out_dir) / "sweep.csv");
  std::cout << "lambda,f1_mean,f1_std\n";
  for (const auto& r : rows) std::cout << r.lambda << ',' << r.f1_mean << ',' << r.f1_std << "\n";
  return kExitOk;
}

int run_generate(const std::string& spec_path, const std::string& out_dir) {
  std::ifstream in(spec_path, std::ios::binary);
  if (!in) throw UsageError("cannot open sbm spec: " + spec_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw imgbk::DataError(spec_path + ": " + e.what());
  }
  imgbk::SbmSpec spec;
  spec.class_sizes = j.at("class_sizes").get<std::vector<std::int64_t>>();
  spec.p_in = j.at("p_in").get<std::vector<double>>();
  spec.p_out = j.at("p_out").get<double>();
  spec.feature_dim = j.value("feature_dim", std::int64_t{16});
  spec.class_mean_separation = j.value("class_mean_separation", 1.0);
  spec.noise_std = j.value("noise_std", 1.0);
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.name = j.value("name", std::string("sbm"));

  imgbk::DatasetBundle bundle = imgbk::sbm_generate(spec);
  imgbk::save_dataset(bundle, out_dir);
  std::cout << "generated " << bundle.graph.n_nodes << " nodes, " << bundle.graph.n_edges
            << " undirected edges\n"
            << "expected homophily: " << imgbk::expected_homophily(spec) << "\n"
            << "empirical homophily: " << imgbk::graph_homophily(bundle.graph) << "\n"
            << "wrote " << out_dir << "\n";
  return kExitOk;
}

int run_rerun(const std::string& manifest_path, const std::string& out_dir) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw UsageError("cannot open manifest: " + manifest_path);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw imgbk::DataError(manifest_path + ": " + e.what());
  }
  const std::string kind = manifest.value("kind", "");
  const std::string dataset_dir = manifest.at("dataset_dir").get<std::string>();
  imgbk::DatasetBundle bundle = load_bundle_for_cli(dataset_dir);
  const std::string checksum = imgbk::dataset_checksum(dataset_dir);
  if (checksum != manifest.at("dataset_checksum").get<std::string>())
    throw imgbk::DataError("dataset checksum mismatch; data changed since the original run");
  apply_extreme(bundle, manifest.value("extreme", std::string{}),
                manifest.value("extreme_seed", std::uint64_t{0}));

  if (kind == "train") {
    imgbk::TrainConfig cfg = train_config_from_json(manifest.at("config"));
    return run_train_with_config(bundle, cfg, manifest, out_dir);
  }
  if (kind == "sweep-lambda") {
    imgbk::TrainConfig cfg = train_config_from_json(manifest.at("config"));
    write_manifest(manifest, out_dir);
    auto rows = imgbk::lambda_sweep(bundle, cfg, manifest.at("lambdas").get<std::vector<double>>(),
                                    manifest.at("seeds").get<std::vector<std::uint64_t>>());
    imgbk::write_sweep_csv(rows, fs::path(out_dir) / "sweep.csv");
    return kExitOk;
  }
  throw UsageError("cannot rerun manifest kind: " + kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imbalanced node classification with gated bi-kernel message passing"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Dataset statistics: counts, imbalance, homophily");
  std::string analyze_dir, analyze_out = ".";
  analyze->add_option("dataset-dir", analyze_dir, "GraphText dataset directory")->required();
  analyze->add_option("--out", analyze_out, "Output directory for stats.json / per_class.csv");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model and write metrics + checkpoint");
  TrainOptions topt;
  train_cmd->add_option("dataset-dir", topt.dataset_dir)->required();
  train_cmd->add_option("--model", topt.model, "gcn|gbk|im-gbk|fast-im-gbk")
      ->check(CLI::IsMember({"gcn", "gbk", "im-gbk", "fast-im-gbk"}));
  train_cmd->add_option("--loss", topt.loss, "ce|reweight|logit-adj|balanced")
      ->check(CLI::IsMember({"ce", "reweight", "logit-adj", "balanced"}));
  auto* lambda_opt = train_cmd->add_option("--lambda", topt.lambda, "gate-loss weight");
  train_cmd->add_option("--epsilon", topt.epsilon, "fast-gate threshold in (0, 0.5)");
  train_cmd->add_option("--tau", topt.tau, "logit-adjustment temperature");
  train_cmd->add_option("--seed", topt.seed);
  train_cmd->add_option("--hidden", topt.hidden, "hidden width");
  train_cmd->add_option("--epochs", topt.epochs);
  train_cmd->add_option("--patience", topt.patience, "early-stop patience on val macro-F1");
  train_cmd->add_option("--lr", topt.lr);
  train_cmd->add_option("--weight-decay", topt.weight_decay);
  train_cmd->add_option("--fast-hg", topt.fast_hg, "homophily source for the fast gate: train|all");
  train_cmd->add_option("--extreme", topt.extreme, "minority classes, e.g. classes=1,2,k=5");
  train_cmd->add_option("--extreme-seed", topt.extreme_seed);
  train_cmd->add_option("--out", topt.out_dir, "run output directory");

  // bench
  auto* bench = app.add_subcommand("bench", "Per-epoch training-time benchmark");
  std::string bench_dir, bench_out = "bench", bench_loss = "balanced";
  std::vector<std::string> bench_models;
  std::int64_t bench_repeats = 5, bench_warmup = 2, bench_hidden = 128;
  std::uint64_t bench_seed = 0;
  bench->add_option("dataset-dir", bench_dir)->required();
  bench->add_option("--models", bench_models, "subset of gcn|gbk|im-gbk|fast-im-gbk");
  bench->add_option("--repeats", bench_repeats, "measured epochs (>= 3)");
  bench->add_option("--warmup", bench_warmup);
  bench->add_option("--hidden", bench_hidden);
  bench->add_option("--loss", bench_loss);
  bench->add_option("--seed", bench_seed);
  bench->add_option("--out", bench_out);

  // sweep-lambda
  auto* sweep = app.add_subcommand("sweep-lambda", "Metrics on a lambda grid");
  TrainOptions sopt;
  sopt.model = "im-gbk";
  sopt.loss = "balanced";
  sopt.out_dir = "sweep";
  double sweep_max = 5.0, sweep_step = 0.5;
  std::vector<std::uint64_t> sweep_seeds{0, 1, 2, 3, 4};
  sweep->add_option("dataset-dir", sopt.dataset_dir)->required();
  sweep->add_option("--model", sopt.model, "gbk|im-gbk");
  sweep->add_option("--loss", sopt.loss);
  sweep->add_option("--lambda-max", sweep_max);
  sweep->add_option("--lambda-step", sweep_step);
  sweep->add_option("--seeds", sweep_seeds);
  sweep->add_option("--epochs", sopt.epochs);
  sweep->add_option("--patience", sopt.patience);
  sweep->add_option("--hidden", sopt.hidden);
  sweep->add_option("--epsilon", sopt.epsilon);
  sweep->add_option("--tau", sopt.tau);
  sweep->add_option("--extreme", sopt.extreme);
  sweep->add_option("--extreme-seed", sopt.extreme_seed);
  sweep->add_option("--out", sopt.out_dir);

  // generate
  auto* generate = app.add_subcommand("generate", "Write a GraphText bundle from an SBM spec");
  std::string gen_spec, gen_out = "generated";
  generate->add_option("sbm-spec", gen_spec, "JSON spec file")->required();
  generate->add_option("--out", gen_out);

  // rerun
  auto* rerun = app.add_subcommand("rerun", "Re-run a command from its run_manifest.json");
  std::string rerun_manifest, rerun_out = "rerun";
  rerun->add_option("manifest", rerun_manifest)->required();
  rerun->add_option("--out", rerun_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*analyze) return run_analyze(analyze_dir, analyze_out);
    if (*train_cmd) {
      topt.lambda_given = lambda_opt->count() > 0;
      return run_train(topt);
    }
    if (*bench)
      return run_bench(bench_dir, bench_models, bench_repeats, bench_warmup, bench_hidden,
                       bench_loss, bench_seed, bench_out);
    if (*sweep) return run_sweep(sopt, sweep_max, sweep_step, sweep_seeds);
    if (*generate) return run_generate(gen_spec, gen_out);
    if (*rerun) return run_rerun(rerun_manifest, rerun_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const imgbk::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const imgbk::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
