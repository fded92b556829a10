#include "imgbk/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "imgbk/errors.hpp"
#include "imgbk/prng.hpp"

namespace imgbk {

namespace {

std::int64_t count_mask(const std::vector<std::uint8_t>& m) {
  return std::count(m.begin(), m.end(), std::uint8_t{1});
}

}  // namespace

std::int64_t SplitMasks::count_train() const { return count_mask(train); }
std::int64_t SplitMasks::count_val() const { return count_mask(val); }
std::int64_t SplitMasks::count_test() const { return count_mask(test); }

Graph build_graph(const std::vector<std::pair<std::int64_t, std::int64_t>>& edges, Tensor features,
                  std::vector<std::int32_t> labels) {
  const std::int64_t n = features.rows();
  if (n == 0) throw std::invalid_argument("build_graph: empty graph");
  if (static_cast<std::int64_t>(labels.size()) != n)
    throw std::invalid_argument("build_graph: features rows != labels length");

  // Canonical undirected pairs (u < v), self-loops dropped.
  std::vector<std::pair<std::int32_t, std::int32_t>> canon;
  canon.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw std::invalid_argument("build_graph: node id out of range: (" + std::to_string(a) +
                                  ", " + std::to_string(b) + ")");
    if (a == b) continue;
    auto u = static_cast<std::int32_t>(std::min(a, b));
    auto v = static_cast<std::int32_t>(std::max(a, b));
    canon.emplace_back(u, v);
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

  Graph g;
  g.n_nodes = n;
  g.n_edges = static_cast<std::int64_t>(canon.size());
  g.features = std::move(features);
  g.labels = std::move(labels);

  std::int32_t max_label = 0;
  for (std::int32_t y : g.labels) {
    if (y < 0) throw std::invalid_argument("build_graph: negative label");
    max_label = std::max(max_label, y);
  }
  g.n_classes = max_label + 1;

  std::vector<std::int64_t> deg(static_cast<std::size_t>(n), 0);
  for (const auto& [u, v] : canon) {
    ++deg[static_cast<std::size_t>(u)];
    ++deg[static_cast<std::size_t>(v)];
  }
  g.csr_offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  for (std::int64_t i = 0; i < n; ++i) g.csr_offsets[i + 1] = g.csr_offsets[i] + deg[i];
  g.csr_neighbors.assign(static_cast<std::size_t>(2 * g.n_edges), 0);
  std::vector<std::int64_t> cursor(g.csr_offsets.begin(), g.csr_offsets.end() - 1);
  for (const auto& [u, v] : canon) {
    g.csr_neighbors[cursor[static_cast<std::size_t>(u)]++] = v;
    g.csr_neighbors[cursor[static_cast<std::size_t>(v)]++] = u;
  }
  // Rows are filled in ascending target order already (canon is sorted by
  // (u,v)), except rows receiving entries as 'v': sort each row to be safe.
  for (std::int64_t i = 0; i < n; ++i) {
    std::sort(g.csr_neighbors.begin() + g.csr_offsets[i], g.csr_neighbors.begin() + g.csr_offsets[i + 1]);
  }

  // Reverse slot map: position of (j -> i) given the slot of (i -> j).
  g.csr_reverse_slot.assign(g.csr_neighbors.size(), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t e = g.csr_offsets[i]; e < g.csr_offsets[i + 1]; ++e) {
      const std::int32_t j = g.csr_neighbors[e];
      auto begin = g.csr_neighbors.begin() + g.csr_offsets[j];
      auto end = g.csr_neighbors.begin() + g.csr_offsets[j + 1];
      auto it = std::lower_bound(begin, end, static_cast<std::int32_t>(i));
      g.csr_reverse_slot[e] = it - g.csr_neighbors.begin();
    }
  }
  return g;
}

void validate_graph(const Graph& g) {
  if (g.n_nodes <= 0) throw DataError("graph: empty");
  if (static_cast<std::int64_t>(g.csr_offsets.size()) != g.n_nodes + 1)
    throw DataError("graph: csr_offsets size mismatch");
  if (g.csr_offsets.front() != 0 ||
      g.csr_offsets.back() != static_cast<std::int64_t>(g.csr_neighbors.size()))
    throw DataError("graph: csr_offsets bounds mismatch");
  if (static_cast<std::int64_t>(g.csr_neighbors.size()) != 2 * g.n_edges)
    throw DataError("graph: neighbor count != 2 * n_edges");
  if (g.features.rows() != g.n_nodes) throw DataError("graph: features rows != n_nodes");
  if (static_cast<std::int64_t>(g.labels.size()) != g.n_nodes)
    throw DataError("graph: labels length != n_nodes");

  std::vector<std::int64_t> class_count(static_cast<std::size_t>(g.n_classes), 0);
  for (std::int32_t y : g.labels) {
    if (y < 0 || y >= g.n_classes) throw DataError("graph: label out of range");
    ++class_count[static_cast<std::size_t>(y)];
  }
  for (std::int32_t c = 0; c < g.n_classes; ++c) {
    if (class_count[static_cast<std::size_t>(c)] == 0)
      throw DataError("graph: class " + std::to_string(c) + " has no nodes");
  }

  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (g.csr_offsets[i] > g.csr_offsets[i + 1]) throw DataError("graph: csr_offsets not nondecreasing");
    auto nb = g.neighbors(i);
    for (std::size_t t = 0; t < nb.size(); ++t) {
      const std::int32_t j = nb[t];
      if (j < 0 || j >= g.n_nodes) throw DataError("graph: neighbor id out of range");
      if (j == i) throw DataError("graph: self-loop at node " + std::to_string(i));
      if (t > 0 && nb[t - 1] >= j) throw DataError("graph: row not sorted/duplicate at node " + std::to_string(i));
      // symmetry
      auto back = g.neighbors(j);
      if (!std::binary_search(back.begin(), back.end(), static_cast<std::int32_t>(i)))
        throw DataError("graph: asymmetric edge (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
  }
}

SplitMasks split_random(const Graph& g, std::array<double, 3> fractions, std::uint64_t seed) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split_random: fractions must sum to 1");
  if (g.n_nodes == 0) throw std::invalid_argument("split_random: empty graph");

  const std::int64_t n = g.n_nodes;
  std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Prng rng(seed);
  for (std::int64_t i = n - 1; i > 0; --i) {
    std::uint64_t j = rng.next_below(static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
  }

  // val/test take floor(fraction * n) each; remainder goes to train.
  const auto n_val = static_cast<std::int64_t>(fractions[1] * static_cast<double>(n));
  const auto n_test = static_cast<std::int64_t>(fractions[2] * static_cast<double>(n));
  const std::int64_t n_train = n - n_val - n_test;
  if (n_train <= 0) throw std::invalid_argument("split_random: train split empty");

  SplitMasks m;
  m.train.assign(static_cast<std::size_t>(n), 0);
  m.val.assign(static_cast<std::size_t>(n), 0);
  m.test.assign(static_cast<std::size_t>(n), 0);
  for (std::int64_t t = 0; t < n; ++t) {
    auto node = static_cast<std::size_t>(perm[static_cast<std::size_t>(t)]);
    if (t < n_train) m.train[node] = 1;
    else if (t < n_train + n_val) m.val[node] = 1;
    else m.test[node] = 1;
  }

  std::vector<std::uint8_t> seen(static_cast<std::size_t>(g.n_classes), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    if (m.train[static_cast<std::size_t>(i)]) seen[static_cast<std::size_t>(g.labels[static_cast<std::size_t>(i)])] = 1;
  }
  for (std::int32_t c = 0; c < g.n_classes; ++c) {
    if (!seen[static_cast<std::size_t>(c)])
      throw DataError("split_random: class " + std::to_string(c) + " absent from train split");
  }
  return m;
}

SplitMasks make_extreme_split(const Graph& g, const SplitMasks& masks,
                              const std::vector<std::int32_t>& minority_classes, std::int64_t k,
                              std::uint64_t seed) {
  if (k <= 0) throw std::invalid_argument("make_extreme_split: k must be positive");
  SplitMasks out = masks;
  Prng root(seed);
  for (std::int32_t c : minority_classes) {
    if (c < 0 || c >= g.n_classes)
      throw std::invalid_argument("make_extreme_split: class id out of range: " + std::to_string(c));
    std::vector<std::int64_t> members;
    for (std::int64_t i = 0; i < g.n_nodes; ++i) {
      if (masks.train[static_cast<std::size_t>(i)] && g.labels[static_cast<std::size_t>(i)] == c)
        members.push_back(i);
    }
    if (static_cast<std::int64_t>(members.size()) < k)
      throw DataError("make_extreme_split: class " + std::to_string(c) + " has " +
                      std::to_string(members.size()) + " train nodes, need " + std::to_string(k));
    Prng rng = root.split(static_cast<std::uint64_t>(c));
    // Partial Fisher-Yates: the first k entries are the kept nodes.
    for (std::int64_t t = 0; t < k; ++t) {
      std::uint64_t j = t + rng.next_below(static_cast<std::uint64_t>(members.size() - t));
      std::swap(members[static_cast<std::size_t>(t)], members[j]);
    }
    for (std::size_t t = static_cast<std::size_t>(k); t < members.size(); ++t) {
      out.train[static_cast<std::size_t>(members[t])] = 0;  // excluded from every mask
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// GraphText serialization

namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return {buf, res.ptr};
}

double parse_double(std::string_view s, const std::string& file, std::int64_t line) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DataError(file + ":" + std::to_string(line) + ": malformed float '" + std::string(s) + "'");
  return v;
}

std::int64_t parse_int(std::string_view s, const std::string& file, std::int64_t line) {
  std::int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DataError(file + ":" + std::to_string(line) + ": malformed integer '" + std::string(s) + "'");
  return v;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void split_tabs(const std::string& line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  for (;;) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.emplace_back(line.data() + start, line.size() - start);
      return;
    }
    out.emplace_back(line.data() + start, tab - start);
    start = tab + 1;
  }
}

}  // namespace

void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir) {
  const Graph& g = bundle.graph;
  std::filesystem::create_directories(dir);

  nlohmann::json meta;
  meta["name"] = bundle.name;
  meta["n_nodes"] = g.n_nodes;
  meta["n_edges"] = g.n_edges;
  meta["n_features"] = g.feature_dim();
  meta["n_classes"] = g.n_classes;
  if (!bundle.provenance.empty()) meta["provenance"] = bundle.provenance;
  {
    std::ofstream out(dir / "meta.json", std::ios::binary);
    out << meta.dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "edges.tsv", std::ios::binary);
    for (std::int64_t i = 0; i < g.n_nodes; ++i) {
      for (std::int32_t j : g.neighbors(i)) {
        if (i < j) out << i << '\t' << j << '\n';
      }
    }
  }
  {
    std::ofstream out(dir / "features.tsv", std::ios::binary);
    for (std::int64_t i = 0; i < g.n_nodes; ++i) {
      auto row = g.features.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out << '\t';
        out << format_double(row[j]);
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.tsv", std::ios::binary);
    for (std::int32_t y : g.labels) out << y << '\n';
  }
  {
    std::ofstream out(dir / "masks.tsv", std::ios::binary);
    for (std::int64_t i = 0; i < g.n_nodes; ++i) {
      auto u = static_cast<std::size_t>(i);
      if (bundle.masks.train[u]) out << "train\n";
      else if (bundle.masks.val[u]) out << "val\n";
      else if (bundle.masks.test[u]) out << "test\n";
      else out << "none\n";
    }
  }
}

DatasetBundle load_dataset(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.json";
  std::ifstream meta_in(meta_path, std::ios::binary);
  if (!meta_in) throw DataError("missing file: " + meta_path.string());
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }

  DatasetBundle bundle;
  bundle.name = meta.value("name", "");
  bundle.provenance = meta.value("provenance", "");
  const auto n_nodes = meta.at("n_nodes").get<std::int64_t>();
  const auto n_edges = meta.at("n_edges").get<std::int64_t>();
  const auto n_features = meta.at("n_features").get<std::int64_t>();
  const auto n_classes = meta.at("n_classes").get<std::int32_t>();
  if (n_nodes <= 0) throw DataError(meta_path.string() + ": n_nodes must be positive");

  // edges.tsv
  const std::string edges_name = (dir / "edges.tsv").string();
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  {
    auto lines = read_lines(dir / "edges.tsv");
    std::vector<std::string_view> parts;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      if (lines[ln].empty()) continue;
      split_tabs(lines[ln], parts);
      if (parts.size() != 2)
        throw DataError(edges_name + ":" + std::to_string(ln + 1) + ": expected 'u<TAB>v'");
      std::int64_t u = parse_int(parts[0], edges_name, static_cast<std::int64_t>(ln + 1));
      std::int64_t v = parse_int(parts[1], edges_name, static_cast<std::int64_t>(ln + 1));
      if (u >= v)
        throw DataError(edges_name + ":" + std::to_string(ln + 1) + ": edges must satisfy u < v");
      if (u < 0 || v >= n_nodes)
        throw DataError(edges_name + ":" + std::to_string(ln + 1) + ": node id out of range");
      edges.emplace_back(u, v);
    }
  }
  if (static_cast<std::int64_t>(edges.size()) != n_edges)
    throw DataError(edges_name + ": " + std::to_string(edges.size()) + " edges, meta.json declares " +
                    std::to_string(n_edges));

  // features.tsv
  const std::string feat_name = (dir / "features.tsv").string();
  Tensor features(n_nodes, n_features);
  {
    auto lines = read_lines(dir / "features.tsv");
    std::int64_t row = 0;
    std::vector<std::string_view> parts;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      if (lines[ln].empty()) continue;
      if (row >= n_nodes) throw DataError(feat_name + ": more rows than n_nodes");
      split_tabs(lines[ln], parts);
      if (static_cast<std::int64_t>(parts.size()) != n_features)
        throw DataError(feat_name + ":" + std::to_string(ln + 1) + ": expected " +
                        std::to_string(n_features) + " values, got " + std::to_string(parts.size()));
      for (std::int64_t j = 0; j < n_features; ++j)
        features(row, j) = parse_double(parts[static_cast<std::size_t>(j)], feat_name,
                                        static_cast<std::int64_t>(ln + 1));
      ++row;
    }
    if (row != n_nodes)
      throw DataError(feat_name + ": " + std::to_string(row) + " rows, meta.json declares " +
                      std::to_string(n_nodes));
  }

  // labels.tsv
  const std::string labels_name = (dir / "labels.tsv").string();
  std::vector<std::int32_t> labels;
  {
    auto lines = read_lines(dir / "labels.tsv");
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      if (lines[ln].empty()) continue;
      std::int64_t y = parse_int(lines[ln], labels_name, static_cast<std::int64_t>(ln + 1));
      if (y < 0 || y >= n_classes)
        throw DataError(labels_name + ":" + std::to_string(ln + 1) + ": label " + std::to_string(y) +
                        " out of range [0, " + std::to_string(n_classes) + ")");
      labels.push_back(static_cast<std::int32_t>(y));
    }
    if (static_cast<std::int64_t>(labels.size()) != n_nodes)
      throw DataError(labels_name + ": " + std::to_string(labels.size()) +
                      " labels, meta.json declares " + std::to_string(n_nodes));
  }

  try {
    bundle.graph = build_graph(edges, std::move(features), std::move(labels));
  } catch (const std::invalid_argument& e) {
    throw DataError(dir.string() + ": " + e.what());
  }
  if (bundle.graph.n_edges != n_edges)
    throw DataError(edges_name + ": duplicate or self-loop edges (canonical count " +
                    std::to_string(bundle.graph.n_edges) + " != declared " + std::to_string(n_edges) + ")");
  bundle.graph.n_classes = n_classes;  // validate_graph rejects absent classes

  // masks.tsv (optional)
  bundle.masks.train.assign(static_cast<std::size_t>(n_nodes), 0);
  bundle.masks.val.assign(static_cast<std::size_t>(n_nodes), 0);
  bundle.masks.test.assign(static_cast<std::size_t>(n_nodes), 0);
  const auto masks_path = dir / "masks.tsv";
  if (std::filesystem::exists(masks_path)) {
    const std::string masks_name = masks_path.string();
    auto lines = read_lines(masks_path);
    std::int64_t row = 0;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      const std::string& w = lines[ln];
      if (w.empty()) continue;
      if (row >= n_nodes) throw DataError(masks_name + ": more rows than n_nodes");
      auto u = static_cast<std::size_t>(row);
      if (w == "train") bundle.masks.train[u] = 1;
      else if (w == "val") bundle.masks.val[u] = 1;
      else if (w == "test") bundle.masks.test[u] = 1;
      else if (w != "none")
        throw DataError(masks_name + ":" + std::to_string(ln + 1) + ": expected train/val/test/none, got '" + w + "'");
      ++row;
    }
    if (row != n_nodes)
      throw DataError(masks_name + ": " + std::to_string(row) + " rows, meta.json declares " +
                      std::to_string(n_nodes));
  }

  validate_graph(bundle.graph);
  return bundle;
}

std::string dataset_checksum(const std::filesystem::path& dir) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix_file = [&h](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
      for (std::streamsize i = 0; i < in.gcount(); ++i) {
        h ^= static_cast<unsigned char>(buf[i]);
        h *= 0x100000001b3ull;
      }
    }
  };
  for (const char* name : {"meta.json", "edges.tsv", "features.tsv", "labels.tsv", "masks.tsv"})
    mix_file(dir / name);
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace imgbk
