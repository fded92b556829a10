#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "imgbk/graph.hpp"
#include "imgbk/prng.hpp"
#include "imgbk/tensor.hpp"

namespace imgbk::testing {

inline Tensor random_tensor(Prng& rng, std::int64_t rows, std::int64_t cols, double scale = 1.0) {
  Tensor t(rows, cols);
  for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = scale * rng.next_normal();
  return t;
}

// Path 0-1-2-3 with labels [0, 0, 1, 1] and 2-dim features.
inline Graph path4_graph() {
  Tensor feats(4, 2);
  for (std::int64_t i = 0; i < 4; ++i) {
    feats(i, 0) = static_cast<double>(i);
    feats(i, 1) = 1.0;
  }
  return build_graph({{0, 1}, {1, 2}, {2, 3}}, std::move(feats), {0, 0, 1, 1});
}

// Small connected graph with mixed labels for gradient checks.
inline Graph toy_graph(std::uint64_t seed = 7, std::int64_t n = 12, std::int64_t d = 3,
                       std::int32_t m = 3) {
  Prng rng(seed);
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  for (std::int64_t i = 1; i < n; ++i) edges.emplace_back(i - 1, i);  // path keeps it connected
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 2; j < n; ++j) {
      if (rng.next_double() < 0.25) edges.emplace_back(i, j);
    }
  }
  Tensor feats = random_tensor(rng, n, d);
  std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    labels[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i % m);
  return build_graph(edges, std::move(feats), std::move(labels));
}

inline SplitMasks all_train_masks(const Graph& g) {
  SplitMasks m;
  m.train.assign(static_cast<std::size_t>(g.n_nodes), 1);
  m.val.assign(static_cast<std::size_t>(g.n_nodes), 0);
  m.test.assign(static_cast<std::size_t>(g.n_nodes), 0);
  return m;
}

// Relabels node i as perm[i]; used for equivariance checks.
inline Graph permute_graph(const Graph& g, const std::vector<std::int64_t>& perm) {
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    for (std::int32_t j : g.neighbors(i)) {
      if (j > i) edges.emplace_back(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
  }
  Tensor feats(g.n_nodes, g.feature_dim());
  std::vector<std::int32_t> labels(static_cast<std::size_t>(g.n_nodes));
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    const std::int64_t p = perm[static_cast<std::size_t>(i)];
    for (std::int64_t c = 0; c < g.feature_dim(); ++c) feats(p, c) = g.features(i, c);
    labels[static_cast<std::size_t>(p)] = g.labels[static_cast<std::size_t>(i)];
  }
  return build_graph(edges, std::move(feats), std::move(labels));
}

}  // namespace imgbk::testing
