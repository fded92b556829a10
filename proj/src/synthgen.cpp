#include "imgbk/synthgen.hpp"

#include <iostream>
#include <numeric>
#include <stdexcept>

#include "imgbk/prng.hpp"

namespace imgbk {

void SbmSpec::validate() const {
  if (class_sizes.empty()) throw std::invalid_argument("SbmSpec: no classes");
  if (p_in.size() != class_sizes.size())
    throw std::invalid_argument("SbmSpec: p_in length != class count");
  for (std::int64_t s : class_sizes) {
    if (s < 1) throw std::invalid_argument("SbmSpec: class sizes must be >= 1");
  }
  for (double p : p_in) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("SbmSpec: p_in out of [0, 1]");
  }
  if (p_out < 0.0 || p_out > 1.0) throw std::invalid_argument("SbmSpec: p_out out of [0, 1]");
  if (feature_dim < 1) throw std::invalid_argument("SbmSpec: feature_dim must be >= 1");
  if (noise_std < 0.0) throw std::invalid_argument("SbmSpec: noise_std must be >= 0");
}

DatasetBundle sbm_generate(const SbmSpec& spec) {
  spec.validate();
  const auto m = static_cast<std::int32_t>(spec.class_sizes.size());
  const std::int64_t n = std::accumulate(spec.class_sizes.begin(), spec.class_sizes.end(),
                                         std::int64_t{0});

  std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
  {
    std::int64_t at = 0;
    for (std::int32_t c = 0; c < m; ++c) {
      for (std::int64_t k = 0; k < spec.class_sizes[static_cast<std::size_t>(c)]; ++k)
        labels[static_cast<std::size_t>(at++)] = c;
    }
  }

  for (std::int32_t c = 0; c < m; ++c) {
    const auto nc = static_cast<double>(spec.class_sizes[static_cast<std::size_t>(c)]);
    const double expected_deg =
        spec.p_in[static_cast<std::size_t>(c)] * (nc - 1.0) + spec.p_out * (static_cast<double>(n) - nc);
    if (expected_deg < 1e-12)
      std::cerr << "warning: class " << c << " has expected degree 0\n";
  }

  Prng root(spec.seed);
  Prng edge_rng = root.split(1);
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int32_t yi = labels[static_cast<std::size_t>(i)];
    for (std::int64_t j = i + 1; j < n; ++j) {
      const double p = labels[static_cast<std::size_t>(j)] == yi
                           ? spec.p_in[static_cast<std::size_t>(yi)]
                           : spec.p_out;
      if (p > 0.0 && edge_rng.next_double() < p) edges.emplace_back(i, j);
    }
  }

  Prng feat_rng = root.split(2);
  Tensor features(n, spec.feature_dim);
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t axis = labels[static_cast<std::size_t>(i)] % spec.feature_dim;
    for (std::int64_t j = 0; j < spec.feature_dim; ++j) {
      double v = spec.noise_std * feat_rng.next_normal();
      if (j == axis) v += spec.class_mean_separation;
      features(i, j) = v;
    }
  }

  DatasetBundle bundle;
  bundle.graph = build_graph(edges, std::move(features), std::move(labels));
  bundle.masks = split_random(bundle.graph, {0.6, 0.2, 0.2}, root.split(3).next_u64());
  bundle.name = spec.name;
  bundle.provenance = "sbm_generate seed=" + std::to_string(spec.seed);
  return bundle;
}

double expected_homophily(const SbmSpec& spec) {
  spec.validate();
  const auto m = spec.class_sizes.size();
  double within = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    const auto nc = static_cast<double>(spec.class_sizes[c]);
    within += spec.p_in[c] * nc * (nc - 1.0) / 2.0;
  }
  double cross_pairs = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t c2 = c + 1; c2 < m; ++c2) {
      cross_pairs += static_cast<double>(spec.class_sizes[c]) *
                     static_cast<double>(spec.class_sizes[c2]);
    }
  }
  const double total = within + spec.p_out * cross_pairs;
  if (total <= 0.0) throw std::invalid_argument("expected_homophily: zero expected edges");
  return within / total;
}

}  // namespace imgbk
