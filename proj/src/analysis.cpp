#include "imgbk/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

#include "imgbk/errors.hpp"

namespace imgbk {

std::vector<std::int64_t> class_counts(const Graph& g) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(g.n_classes), 0);
  for (std::int32_t y : g.labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

double imbalance_ratio(const std::vector<std::int64_t>& counts) {
  if (counts.empty()) throw std::invalid_argument("imbalance_ratio: no classes");
  auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
  if (*mn <= 0) throw std::invalid_argument("imbalance_ratio: zero class count");
  return static_cast<double>(*mx) / static_cast<double>(*mn);
}

double class_homophily(const Graph& g, std::int32_t y, std::int64_t* isolated_out) {
  if (y < 0 || y >= g.n_classes) throw std::invalid_argument("class_homophily: class id out of range");
  double sum = 0.0;
  std::int64_t used = 0;
  std::int64_t isolated = 0;
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (g.labels[static_cast<std::size_t>(i)] != y) continue;
    auto nb = g.neighbors(i);
    if (nb.empty()) {
      ++isolated;
      continue;
    }
    std::int64_t same = 0;
    for (std::int32_t j : nb) {
      if (g.labels[static_cast<std::size_t>(j)] == y) ++same;
    }
    sum += static_cast<double>(same) / static_cast<double>(nb.size());
    ++used;
  }
  if (used == 0) throw std::invalid_argument("class_homophily: class " + std::to_string(y) +
                                             " has no nodes with neighbors");
  if (isolated_out) {
    *isolated_out = isolated;
  } else if (isolated > 0) {
    std::cerr << "warning: class " << y << ": " << isolated
              << " isolated node(s) excluded from homophily mean\n";
  }
  return sum / static_cast<double>(used);
}

double graph_homophily(const Graph& g) {
  if (g.n_edges == 0) throw std::invalid_argument("graph_homophily: empty edge set");
  std::int64_t same = 0;
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    for (std::int32_t j : g.neighbors(i)) {
      if (j > i && g.labels[static_cast<std::size_t>(i)] == g.labels[static_cast<std::size_t>(j)]) ++same;
    }
  }
  return static_cast<double>(same) / static_cast<double>(g.n_edges);
}

ClassStats profile(const DatasetBundle& bundle) {
  const Graph& g = bundle.graph;
  ClassStats stats;
  stats.counts = class_counts(g);
  stats.imbalance_ratio = imbalance_ratio(stats.counts);
  stats.graph_homophily = graph_homophily(g);
  stats.class_homophily.resize(static_cast<std::size_t>(g.n_classes));

  double node_sum = 0.0;
  std::int64_t node_used = 0;
  for (std::int32_t c = 0; c < g.n_classes; ++c) {
    std::int64_t isolated = 0;
    double h = class_homophily(g, c, &isolated);
    stats.class_homophily[static_cast<std::size_t>(c)] = h;
    stats.isolated_nodes += isolated;
    const std::int64_t used = stats.counts[static_cast<std::size_t>(c)] - isolated;
    node_sum += h * static_cast<double>(used);
    node_used += used;
  }
  stats.node_homophily = node_sum / static_cast<double>(node_used);
  double class_sum = 0.0;
  for (double h : stats.class_homophily) class_sum += h;
  stats.class_mean_homophily = class_sum / static_cast<double>(g.n_classes);
  if (stats.isolated_nodes > 0) {
    std::cerr << "warning: " << stats.isolated_nodes
              << " isolated node(s) excluded from homophily means\n";
  }
  return stats;
}

void write_profile(const ClassStats& stats, const DatasetBundle& bundle,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Graph& g = bundle.graph;

  nlohmann::json j;
  j["name"] = bundle.name;
  j["n_nodes"] = g.n_nodes;
  j["n_edges"] = g.n_edges;
  j["n_edge_directions"] = g.n_edge_directions();
  j["n_features"] = g.feature_dim();
  j["n_classes"] = g.n_classes;
  j["imbalance_ratio"] = stats.imbalance_ratio;
  j["hom_ratio"] = stats.graph_homophily;  // headline, edge-level
  j["graph_homophily"] = stats.graph_homophily;
  j["node_homophily"] = stats.node_homophily;
  j["class_mean_homophily"] = stats.class_mean_homophily;
  j["isolated_nodes"] = stats.isolated_nodes;
  j["class_counts"] = stats.counts;
  j["class_homophily"] = stats.class_homophily;
  {
    std::ofstream out(out_dir / "stats.json", std::ios::binary);
    if (!out) throw DataError("cannot write " + (out_dir / "stats.json").string());
    out << j.dump(2) << "\n";
  }
  {
    std::ofstream out(out_dir / "per_class.csv", std::ios::binary);
    if (!out) throw DataError("cannot write " + (out_dir / "per_class.csv").string());
    out << "class,count,homophily\n";
    for (std::int32_t c = 0; c < g.n_classes; ++c) {
      out << c << ',' << stats.counts[static_cast<std::size_t>(c)] << ','
          << stats.class_homophily[static_cast<std::size_t>(c)] << '\n';
    }
  }
}

}  // namespace imgbk
