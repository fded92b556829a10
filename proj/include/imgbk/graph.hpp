#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "imgbk/tensor.hpp"

namespace imgbk {

// Undirected attributed graph in CSR form. Each undirected edge is stored
// in both directions; neighbor lists are sorted ascending and contain no
// self-loops or duplicates. Immutable after construction.
struct Graph {
  std::int64_t n_nodes = 0;
  std::int64_t n_edges = 0;                      // undirected edge count
  std::vector<std::int64_t> csr_offsets;         // n_nodes + 1
  std::vector<std::int32_t> csr_neighbors;       // 2 * n_edges
  std::vector<std::int64_t> csr_reverse_slot;    // slot of (j -> i) for each slot (i -> j)
  Tensor features;                               // n_nodes x d
  std::vector<std::int32_t> labels;              // values in [0, n_classes)
  std::int32_t n_classes = 0;

  std::int64_t feature_dim() const { return features.cols(); }
  std::int64_t degree(std::int64_t i) const { return csr_offsets[i + 1] - csr_offsets[i]; }
  std::span<const std::int32_t> neighbors(std::int64_t i) const {
    return {csr_neighbors.data() + csr_offsets[i],
            static_cast<std::size_t>(csr_offsets[i + 1] - csr_offsets[i])};
  }
  std::int64_t n_edge_directions() const { return static_cast<std::int64_t>(csr_neighbors.size()); }
};

struct SplitMasks {
  std::vector<std::uint8_t> train;
  std::vector<std::uint8_t> val;
  std::vector<std::uint8_t> test;

  std::int64_t count_train() const;
  std::int64_t count_val() const;
  std::int64_t count_test() const;
};

struct DatasetBundle {
  Graph graph;
  SplitMasks masks;
  std::string name;
  std::string provenance;  // source + conversion note
};

// Builds a canonical CSR graph from an edge list. Edges are symmetrized,
// self-loops dropped, duplicates merged; neighbor lists sorted ascending.
// n_classes is max(label) + 1. Throws std::invalid_argument on out-of-range
// ids or dimension mismatch, and on an empty graph.
Graph build_graph(const std::vector<std::pair<std::int64_t, std::int64_t>>& edges, Tensor features,
                  std::vector<std::int32_t> labels);

// Full-scan check of every Graph invariant (CSR monotone, symmetric, sorted,
// loop-free, labels in range, every class nonempty). Throws DataError.
void validate_graph(const Graph& g);

// Seeded uniform permutation split by global count. val/test get
// floor(fraction * n) nodes each; remainder goes to train. Throws DataError
// if some class is absent from the train split.
SplitMasks split_random(const Graph& g, std::array<double, 3> fractions, std::uint64_t seed);

// For each minority class, keeps exactly k seeded-uniformly-chosen train
// nodes; dropped nodes are excluded from all masks. Other masks unchanged.
SplitMasks make_extreme_split(const Graph& g, const SplitMasks& masks,
                              const std::vector<std::int32_t>& minority_classes, std::int64_t k,
                              std::uint64_t seed);

// GraphText directory format: meta.json, edges.tsv (u<v), features.tsv,
// labels.tsv, optional masks.tsv. UTF-8, LF. Round-trips bit-exactly,
// including float features.
DatasetBundle load_dataset(const std::filesystem::path& dir);
void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);

// FNV-1a 64 over the dataset files in canonical order; used in run manifests.
std::string dataset_checksum(const std::filesystem::path& dir);

}  // namespace imgbk
