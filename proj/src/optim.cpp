#include "imgbk/optim.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "imgbk/errors.hpp"

namespace imgbk {

Param& ParamStore::add(const std::string& name, Tensor init) {
  if (contains(name)) throw std::invalid_argument("ParamStore: duplicate parameter '" + name + "'");
  Param p;
  p.grad = Tensor(init.rows(), init.cols());
  p.m = Tensor(init.rows(), init.cols());
  p.v = Tensor(init.rows(), init.cols());
  p.value = std::move(init);
  params_.emplace_back(name, std::move(p));
  return params_.back().second;
}

Param& ParamStore::at(const std::string& name) {
  for (auto& [n, p] : params_) {
    if (n == name) return p;
  }
  throw std::invalid_argument("ParamStore: unknown parameter '" + name + "'");
}

const Param& ParamStore::at(const std::string& name) const {
  for (const auto& [n, p] : params_) {
    if (n == name) return p;
  }
  throw std::invalid_argument("ParamStore: unknown parameter '" + name + "'");
}

bool ParamStore::contains(const std::string& name) const {
  for (const auto& [n, p] : params_) {
    if (n == name) return true;
  }
  return false;
}

void ParamStore::zero_grad() {
  for (auto& [n, p] : params_) p.grad.fill(0.0);
}

void adam_step(ParamStore& store, double lr, double weight_decay, std::pair<double, double> betas,
               double eps) {
  const auto [beta1, beta2] = betas;
  const std::int64_t t = ++store.step_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (auto& [name, p] : store.params_) {
    for (std::int64_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.data()[i] + weight_decay * p.value.data()[i];
      double& m = p.m.data()[i];
      double& v = p.v.data()[i];
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g * g;
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      p.value.data()[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
    if (!all_finite(p.value)) throw NumericalError("adam_step: parameter '" + name + "' non-finite");
  }
}

Tensor glorot_init(Prng& rng, std::int64_t rows, std::int64_t cols) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("glorot_init: dimensions must be positive");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t(rows, cols);
  for (std::int64_t i = 0; i < t.size(); ++i)
    t.data()[i] = (2.0 * rng.next_double() - 1.0) * bound;
  return t;
}

double grad_check(const std::function<ValueId(TapeBinding&)>& build, ParamStore& store, double eps,
                  std::int64_t max_coords_per_param, std::uint64_t seed) {
  auto eval = [&](bool want_grads) {
    Tape tape;
    TapeBinding binding{tape, store, {}};
    ValueId root = build(binding);
    const double value = tape.value(root)(0, 0);
    if (want_grads) {
      tape.backward(root);
      store.zero_grad();
      binding.copy_grads_to_store();
    }
    return value;
  };

  const double v1 = eval(true);
  const double v2 = eval(false);
  if (v1 != v2) throw NumericalError("grad_check: build is not deterministic");

  Prng rng(seed);
  double max_rel = 0.0;
  for (auto& [name, p] : store.items()) {
    const std::int64_t n = p.value.size();
    const std::int64_t samples = std::min<std::int64_t>(n, max_coords_per_param);
    const Tensor analytic = p.grad;  // copied before perturbation runs overwrite it
    for (std::int64_t s = 0; s < samples; ++s) {
      const std::int64_t idx =
          samples == n ? s : static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(n)));
      const double original = p.value.data()[idx];
      p.value.data()[idx] = original + eps;
      const double f_plus = eval(false);
      p.value.data()[idx] = original - eps;
      const double f_minus = eval(false);
      p.value.data()[idx] = original;
      const double fd = (f_plus - f_minus) / (2.0 * eps);
      const double a = analytic.data()[idx];
      const double rel = std::abs(a - fd) / std::max(1e-8, std::abs(a) + std::abs(fd));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path) {
  nlohmann::json j;
  j["version"] = 1;
  j["step"] = store.step_count();
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, p] : store.items()) {
    nlohmann::json entry;
    entry["shape"] = {p.value.rows(), p.value.cols()};
    entry["data"] = std::vector<double>(p.value.data(), p.value.data() + p.value.size());
    params[name] = std::move(entry);
  }
  j["params"] = std::move(params);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out << j.dump() << "\n";
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!j.contains("version") || j.at("version").get<int>() != 1)
    throw DataError(path.string() + ": unsupported checkpoint version");
  ParamStore store;
  for (const auto& [name, entry] : j.at("params").items()) {
    const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
    const auto data = entry.at("data").get<std::vector<double>>();
    if (shape.size() != 2 || static_cast<std::int64_t>(data.size()) != shape[0] * shape[1])
      throw DataError(path.string() + ": bad shape for parameter '" + name + "'");
    Tensor t(shape[0], shape[1]);
    std::copy(data.begin(), data.end(), t.data());
    store.add(name, std::move(t));
  }
  store.set_step_count(j.value("step", std::int64_t{0}));
  return store;
}

}  // namespace imgbk
