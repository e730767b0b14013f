#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rubik/errors.hpp"
#include "rubik/rng.hpp"

namespace rubik {

using NodeId = std::uint32_t;

/// Immutable CSR graph. Neighbor slices are sorted and duplicate-free
/// (canonical form); undirected graphs materialize both directions so a
/// node's full neighborhood is one slice. `num_edges()` counts directed
/// slots, i.e. an undirected edge occupies two.
struct Graph {
  std::vector<std::uint64_t> row_offsets;  // length num_nodes + 1
  std::vector<NodeId> neighbor_ids;        // length num_edges
  std::uint32_t feature_dim = 0;
  bool directed = false;
  // Original labels of the (dense, 0-based) node ids, kept so reports can
  // show the ids the input file used. Empty means identity.
  std::vector<std::uint64_t> original_ids;

  std::size_t num_nodes() const { return row_offsets.empty() ? 0 : row_offsets.size() - 1; }
  std::size_t num_edges() const { return neighbor_ids.size(); }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {neighbor_ids.data() + row_offsets[v], neighbor_ids.data() + row_offsets[v + 1]};
  }

  std::size_t degree(NodeId v) const { return row_offsets[v + 1] - row_offsets[v]; }

  std::uint64_t original_id(NodeId v) const {
    return original_ids.empty() ? v : original_ids[v];
  }

  bool operator==(const Graph& other) const {
    return row_offsets == other.row_offsets && neighbor_ids == other.neighbor_ids &&
           feature_dim == other.feature_dim && directed == other.directed;
  }
};

struct GraphStats {
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;
  double avg_degree = 0.0;
  std::size_t max_degree = 0;
};

inline GraphStats stats(const Graph& g) {
  GraphStats s;
  s.num_nodes = g.num_nodes();
  s.num_edges = g.num_edges();
  s.avg_degree = s.num_nodes == 0 ? 0.0
                                  : static_cast<double>(s.num_edges) / static_cast<double>(s.num_nodes);
  for (NodeId v = 0; v < s.num_nodes; ++v) s.max_degree = std::max(s.max_degree, g.degree(v));
  return s;
}

namespace detail {

/// Builds a canonical CSR graph from directed (src, dst) slots. Sorts each
/// slice and collapses duplicates.
inline Graph build_csr(std::size_t num_nodes, std::vector<std::pair<NodeId, NodeId>>& slots,
                       std::uint32_t feature_dim, bool directed) {
  std::sort(slots.begin(), slots.end());
  slots.erase(std::unique(slots.begin(), slots.end()), slots.end());

  Graph g;
  g.feature_dim = feature_dim;
  g.directed = directed;
  g.row_offsets.assign(num_nodes + 1, 0);
  for (const auto& [src, dst] : slots) g.row_offsets[src + 1]++;
  for (std::size_t v = 1; v <= num_nodes; ++v) g.row_offsets[v] += g.row_offsets[v - 1];
  g.neighbor_ids.resize(slots.size());
  std::vector<std::uint64_t> cursor(g.row_offsets.begin(), g.row_offsets.end() - 1);
  for (const auto& [src, dst] : slots) g.neighbor_ids[cursor[src]++] = dst;
  return g;
}

}  // namespace detail

struct EdgeListOptions {
  bool directed = false;
  std::uint32_t feature_dim = 1;
  std::uint32_t base_index = 0;  // lowest legal node id in the file, 0 or 1
};

/// Parses "src dst" pairs, one per line; '#' starts a comment line. Node
/// labels are compacted to dense 0-based ids (the label table is kept in
/// Graph::original_ids). Undirected inputs store both directions; duplicate
/// edges collapse; self-loops are kept.
inline Graph load_edge_list(std::istream& in, const EdgeListOptions& opt = {}) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ls(line);
    std::int64_t a = 0, b = 0;
    if (!(ls >> a >> b)) {
      throw ParseError("edge list line " + std::to_string(line_no) + ": expected two integers, got '" + line + "'");
    }
    std::string trailing;
    if (ls >> trailing && !trailing.empty() && trailing[0] != '#') {
      throw ParseError("edge list line " + std::to_string(line_no) + ": trailing token '" + trailing + "'");
    }
    if (a < static_cast<std::int64_t>(opt.base_index) || b < static_cast<std::int64_t>(opt.base_index)) {
      throw ParseError("edge list line " + std::to_string(line_no) + ": node id below base index " +
                       std::to_string(opt.base_index));
    }
    raw.emplace_back(static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b));
  }

  // Dense-rank the labels that actually occur.
  std::vector<std::uint64_t> labels;
  labels.reserve(raw.size() * 2);
  for (const auto& [a, b] : raw) {
    labels.push_back(a);
    labels.push_back(b);
  }
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  auto rank = [&labels](std::uint64_t x) {
    return static_cast<NodeId>(std::lower_bound(labels.begin(), labels.end(), x) - labels.begin());
  };

  std::vector<std::pair<NodeId, NodeId>> slots;
  slots.reserve(raw.size() * (opt.directed ? 1 : 2));
  for (const auto& [a, b] : raw) {
    NodeId s = rank(a), d = rank(b);
    slots.emplace_back(s, d);
    if (!opt.directed && s != d) slots.emplace_back(d, s);
  }
  Graph g = detail::build_csr(labels.size(), slots, opt.feature_dim, opt.directed);
  g.original_ids = std::move(labels);
  return g;
}

inline Graph load_edge_list(const std::string& text, const EdgeListOptions& opt = {}) {
  std::istringstream in(text);
  return load_edge_list(in, opt);
}

/// Inverse of load_edge_list: writes one "src dst" line per edge using the
/// original labels. Undirected graphs emit each edge once (src <= dst).
inline void save_edge_list(const Graph& g, std::ostream& out) {
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    for (NodeId u : g.neighbors(v)) {
      if (!g.directed && u < v) continue;
      out << g.original_id(v) << ' ' << g.original_id(u) << '\n';
    }
  }
}

// --- Binary cache -----------------------------------------------------------
// Little-endian: magic "RBKG", version u32, num_nodes u64, num_edges u64,
// feature_dim u32, flags u32 (bit0 = directed), then row_offsets as u64[]
// and neighbor_ids as u32[].

inline constexpr std::uint32_t kGraphCacheVersion = 1;

inline void save_graph_cache(const Graph& g, std::ostream& out) {
  auto put = [&out](const void* p, std::size_t n) { out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); };
  put("RBKG", 4);
  std::uint32_t version = kGraphCacheVersion;
  std::uint64_t nn = g.num_nodes(), ne = g.num_edges();
  std::uint32_t dim = g.feature_dim;
  std::uint32_t flags = g.directed ? 1u : 0u;
  put(&version, 4);
  put(&nn, 8);
  put(&ne, 8);
  put(&dim, 4);
  put(&flags, 4);
  put(g.row_offsets.data(), g.row_offsets.size() * sizeof(std::uint64_t));
  put(g.neighbor_ids.data(), g.neighbor_ids.size() * sizeof(NodeId));
}

inline Graph load_graph_cache(std::istream& in) {
  auto get = [&in](void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw ParseError("graph cache: truncated file");
  };
  char magic[4];
  get(magic, 4);
  if (std::memcmp(magic, "RBKG", 4) != 0) throw ParseError("graph cache: bad magic");
  std::uint32_t version = 0, dim = 0, flags = 0;
  std::uint64_t nn = 0, ne = 0;
  get(&version, 4);
  if (version != kGraphCacheVersion) throw ParseError("graph cache: unsupported version");
  get(&nn, 8);
  get(&ne, 8);
  get(&dim, 4);
  get(&flags, 4);
  Graph g;
  g.feature_dim = dim;
  g.directed = (flags & 1u) != 0;
  g.row_offsets.resize(nn + 1);
  get(g.row_offsets.data(), g.row_offsets.size() * sizeof(std::uint64_t));
  g.neighbor_ids.resize(ne);
  get(g.neighbor_ids.data(), g.neighbor_ids.size() * sizeof(NodeId));
  if (g.row_offsets.front() != 0 || g.row_offsets.back() != ne) throw ParseError("graph cache: inconsistent offsets");
  return g;
}

// --- Synthetic generators ---------------------------------------------------

/// Stochastic block model, undirected. Block membership is dealt round-robin
/// over node ids (node v belongs to block v % num_blocks) so that index
/// order does not accidentally coincide with community order.
inline Graph generate_sbm(std::size_t num_blocks, std::size_t block_size, double p_in, double p_out,
                          std::uint64_t seed, std::uint32_t feature_dim = 1) {
  if (block_size == 0) throw ArgumentError("generate_sbm: block_size must be > 0");
  if (num_blocks == 0) throw ArgumentError("generate_sbm: num_blocks must be > 0");
  if (!(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0)) {
    throw ArgumentError("generate_sbm: need 0 <= p_out <= p_in <= 1");
  }
  const std::size_t n = num_blocks * block_size;
  Rng rng(mix_seed(seed, 0x5b3));
  std::vector<std::pair<NodeId, NodeId>> slots;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double p = (i % num_blocks == j % num_blocks) ? p_in : p_out;
      if (rng.bernoulli(p)) {
        slots.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        slots.emplace_back(static_cast<NodeId>(j), static_cast<NodeId>(i));
      }
    }
  }
  return detail::build_csr(n, slots, feature_dim, /*directed=*/false);
}

/// Chung-Lu style power-law graph: node weights follow a Pareto tail with
/// the given exponent, scaled so the expected average degree matches the
/// target; pair (i, j) connects with probability min(1, w_i w_j / W).
inline Graph generate_powerlaw(std::size_t num_nodes, double avg_degree_target, double exponent,
                               std::uint64_t seed, std::uint32_t feature_dim = 1) {
  if (num_nodes == 0) throw ArgumentError("generate_powerlaw: num_nodes must be > 0");
  if (exponent <= 1.0) throw ArgumentError("generate_powerlaw: exponent must be > 1");
  if (avg_degree_target <= 0.0 || avg_degree_target > static_cast<double>(num_nodes - 1)) {
    throw ArgumentError("generate_powerlaw: average-degree target infeasible for this node count");
  }
  Rng rng(mix_seed(seed, 0x71a));
  std::vector<double> w(num_nodes);
  double total = 0.0;
  for (auto& wi : w) {
    double u = rng.uniform01();
    wi = std::pow(1.0 - u, -1.0 / (exponent - 1.0));  // Pareto, xmin = 1
    total += wi;
  }
  const double scale = avg_degree_target * static_cast<double>(num_nodes) / total;
  for (auto& wi : w) wi *= scale;
  const double big_w = avg_degree_target * static_cast<double>(num_nodes);

  std::vector<std::pair<NodeId, NodeId>> slots;
  for (std::size_t i = 0; i < num_nodes; ++i) {
    for (std::size_t j = i + 1; j < num_nodes; ++j) {
      double p = std::min(1.0, w[i] * w[j] / big_w);
      if (rng.bernoulli(p)) {
        slots.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        slots.emplace_back(static_cast<NodeId>(j), static_cast<NodeId>(i));
      }
    }
  }
  return detail::build_csr(num_nodes, slots, feature_dim, /*directed=*/false);
}

// --- Feature matrix ---------------------------------------------------------

/// Dense row-major float matrix holding one feature vector per node.
struct FeatureMatrix {
  std::size_t num_nodes = 0;
  std::size_t dim = 0;
  std::vector<float> values;  // num_nodes * dim

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n, std::size_t d) : num_nodes(n), dim(d), values(n * d, 0.0f) {}

  std::span<float> row(std::size_t v) { return {values.data() + v * dim, dim}; }
  std::span<const float> row(std::size_t v) const { return {values.data() + v * dim, dim}; }
};

inline FeatureMatrix make_random_features(std::size_t num_nodes, std::size_t dim, std::uint64_t seed) {
  FeatureMatrix f(num_nodes, dim);
  Rng rng(mix_seed(seed, 0xfea));
  for (auto& x : f.values) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return f;
}

/// FNV-1a over the raw float bytes; used as the output fingerprint in
/// simulation reports.
inline std::uint64_t checksum(const FeatureMatrix& f) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const unsigned char* p = reinterpret_cast<const unsigned char*>(f.values.data());
  std::size_t n = f.values.size() * sizeof(float);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace rubik
