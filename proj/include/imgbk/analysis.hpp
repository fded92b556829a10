#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "imgbk/graph.hpp"

namespace imgbk {

// Per-class and graph-level label statistics. class_homophily follows the
// per-node average (same-label neighbor fraction, isolated nodes excluded);
// graph_homophily is the fraction of edges joining same-label endpoints.
struct ClassStats {
  std::vector<std::int64_t> counts;
  std::vector<double> class_homophily;
  double imbalance_ratio = 0.0;
  double graph_homophily = 0.0;
  // Alternative aggregations of the same per-node quantity; Table-style
  // reports commonly use any of the three.
  double node_homophily = 0.0;        // mean over non-isolated nodes
  double class_mean_homophily = 0.0;  // unweighted mean over classes
  std::int64_t isolated_nodes = 0;
};

std::vector<std::int64_t> class_counts(const Graph& g);

// max(counts) / min(counts); throws on a zero count.
double imbalance_ratio(const std::vector<std::int64_t>& counts);

// Mean over nodes of class y of |same-label neighbors| / |neighbors|.
// Isolated nodes are excluded from the mean; their count is reported via
// isolated_out when given, and a warning is printed otherwise.
double class_homophily(const Graph& g, std::int32_t y, std::int64_t* isolated_out = nullptr);

// Fraction of undirected edges whose endpoints share a label.
double graph_homophily(const Graph& g);

ClassStats profile(const DatasetBundle& bundle);

// Writes stats.json and per_class.csv (columns: class,count,homophily).
void write_profile(const ClassStats& stats, const DatasetBundle& bundle,
                   const std::filesystem::path& out_dir);

}  // namespace imgbk
