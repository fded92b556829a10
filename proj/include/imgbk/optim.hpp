#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "imgbk/prng.hpp"
#include "imgbk/tape.hpp"
#include "imgbk/tensor.hpp"

namespace imgbk {

struct Param {
  Tensor value;
  Tensor grad;
  Tensor m;  // Adam first moment
  Tensor v;  // Adam second moment
};

// Named parameters with gradient slots and Adam state. Insertion order is
// preserved so every seeded run touches parameters in the same order.
class ParamStore {
 public:
  Param& add(const std::string& name, Tensor init);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<std::pair<std::string, Param>>& items() { return params_; }
  const std::vector<std::pair<std::string, Param>>& items() const { return params_; }

  void zero_grad();
  std::int64_t step_count() const { return step_; }
  void set_step_count(std::int64_t s) { step_ = s; }

 private:
  friend void adam_step(ParamStore&, double, double, std::pair<double, double>, double);
  std::vector<std::pair<std::string, Param>> params_;
  std::int64_t step_ = 0;
};

// Adam with bias correction; weight decay enters as a coupled L2 term added
// to the gradient.
void adam_step(ParamStore& store, double lr, double weight_decay,
               std::pair<double, double> betas = {0.9, 0.999}, double eps = 1e-8);

// Uniform in +/- sqrt(6 / (rows + cols)).
Tensor glorot_init(Prng& rng, std::int64_t rows, std::int64_t cols);

// Binds store parameters to tape leaves for one forward build, so gradients
// can be copied back after backward(). Repeated param() calls for one name
// return the same leaf, so gradients of all uses accumulate on the tape.
struct TapeBinding {
  Tape& tape;
  ParamStore& store;
  std::vector<std::pair<std::string, ValueId>> bound;

  ValueId param(const std::string& name) {
    for (const auto& [n, id] : bound) {
      if (n == name) return id;
    }
    ValueId id = tape.leaf(store.at(name).value);
    bound.emplace_back(name, id);
    return id;
  }

  void copy_grads_to_store() {
    for (const auto& [name, id] : bound) store.at(name).grad = tape.grad(id);
  }
};

// Central-difference check of the tape gradient. `build` must construct a
// scalar output from the store's current parameter values; it is invoked
// several times against perturbed parameters. Returns the max relative error
// |a - b| / max(1e-8, |a| + |b|) over sampled coordinates. Throws
// NumericalError if two unperturbed builds disagree bitwise.
double grad_check(const std::function<ValueId(TapeBinding&)>& build, ParamStore& store,
                  double eps = 1e-5, std::int64_t max_coords_per_param = 20,
                  std::uint64_t seed = 0);

// Checkpoint I/O: versioned JSON mapping name -> shape -> row-major values.
// Round-trips float64 exactly.
void save_checkpoint(const ParamStore& store, const std::filesystem::path& path);
ParamStore load_checkpoint(const std::filesystem::path& path);

}  // namespace imgbk
