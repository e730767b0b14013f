#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "rubik/errors.hpp"
#include "rubik/graph.hpp"
#include "rubik/rng.hpp"

namespace rubik {

struct LshParams {
  std::uint32_t num_hashes = 8;
  std::uint64_t seed = 0;
  // Maximum adjacency span searched for shared sets. The shipped miner works
  // at the fixed granularity of two execution-adjacent nodes (the G-C tag is
  // a node pair), so values above 2 are accepted but not yet exploited.
  std::uint32_t window_limit = 2;

  void validate() const {
    if (num_hashes < 1) throw ArgumentError("LshParams: num_hashes must be >= 1");
    if (window_limit < 2) throw ArgumentError("LshParams: window_limit must be >= 2");
  }
};

/// Bijection between execution positions and node ids.
struct Permutation {
  std::vector<NodeId> order;    // position -> node id
  std::vector<NodeId> inverse;  // node id -> position

  static Permutation identity(std::size_t n) {
    Permutation p;
    p.order.resize(n);
    std::iota(p.order.begin(), p.order.end(), 0u);
    p.inverse = p.order;
    return p;
  }

  static Permutation from_order(std::vector<NodeId> order) {
    Permutation p;
    p.inverse.assign(order.size(), 0);
    for (std::size_t pos = 0; pos < order.size(); ++pos) p.inverse[order[pos]] = static_cast<NodeId>(pos);
    p.order = std::move(order);
    return p;
  }

  std::size_t size() const { return order.size(); }

  bool is_valid() const {
    if (inverse.size() != order.size()) return false;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (order[pos] >= order.size() || inverse[order[pos]] != pos) return false;
    }
    return true;
  }
};

/// Two execution-adjacent nodes (in visit order) whose aggregations reuse
/// the partial aggregate of `shared_set` (their full neighbor intersection).
struct SharedPair {
  NodeId first_consumer = 0;   // visited first, publishes the partial
  NodeId second_consumer = 0;  // visited next, loads the partial
  std::vector<NodeId> shared_set;  // sorted, size >= 2

  /// Canonical (min, max) tag used by the G-C cache and the load-i opcode.
  std::pair<NodeId, NodeId> tag() const { return {shared_set.front(), shared_set.back()}; }
};

enum class Strategy { IndexOrder, LR, LR_CR };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::IndexOrder: return "index";
    case Strategy::LR: return "lr";
    case Strategy::LR_CR: return "lrcr";
  }
  return "?";
}

struct ExecutionPlan {
  Permutation permutation;
  std::vector<SharedPair> shared_pairs;  // empty unless strategy == LR_CR
  Strategy strategy = Strategy::IndexOrder;
};

// --- LSH signatures ---------------------------------------------------------

/// Packed bit vector ordered so that word-wise comparison equals
/// lexicographic comparison over hash bits (bit 0 is most significant).
using LshSignature = std::vector<std::uint64_t>;

/// Random projection directions, one standard-normal coefficient per
/// (node, hash). Laid out [node][hash] so a sparse row walk touches
/// contiguous memory.
struct LshHyperplanes {
  std::size_t num_nodes = 0;
  std::uint32_t num_hashes = 0;
  std::vector<double> coeffs;  // num_nodes * num_hashes

  static LshHyperplanes make(std::size_t num_nodes, const LshParams& params) {
    params.validate();
    LshHyperplanes h;
    h.num_nodes = num_nodes;
    h.num_hashes = params.num_hashes;
    h.coeffs.resize(num_nodes * params.num_hashes);
    Rng rng(mix_seed(params.seed, 0x15b));
    for (auto& c : h.coeffs) c = rng.gaussian();
    return h;
  }
};

/// Signature of one adjacency row: bit i = 1 iff the row's dot product with
/// hyperplane i is strictly positive. An empty row hashes to all zeros.
inline LshSignature lsh_signature(std::span<const NodeId> row, const LshHyperplanes& planes) {
  const std::uint32_t h = planes.num_hashes;
  std::vector<double> dots(h, 0.0);
  for (NodeId u : row) {
    const double* c = planes.coeffs.data() + static_cast<std::size_t>(u) * h;
    for (std::uint32_t i = 0; i < h; ++i) dots[i] += c[i];
  }
  LshSignature sig((h + 63) / 64, 0);
  for (std::uint32_t i = 0; i < h; ++i) {
    if (dots[i] > 0.0) sig[i / 64] |= 1ull << (63 - (i % 64));
  }
  return sig;
}

/// Sorts nodes by (signature, id): rows that bucket together become
/// execution-adjacent. Deterministic for a fixed seed.
inline Permutation reorder_lsh(const Graph& g, const LshParams& params) {
  params.validate();
  const std::size_t n = g.num_nodes();
  LshHyperplanes planes = LshHyperplanes::make(n, params);
  std::vector<LshSignature> sigs(n);
  for (NodeId v = 0; v < n; ++v) sigs[v] = lsh_signature(g.neighbors(v), planes);

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&sigs](NodeId a, NodeId b) {
    if (sigs[a] != sigs[b]) return sigs[a] < sigs[b];
    return a < b;
  });
  return Permutation::from_order(std::move(order));
}

/// Sorted-slice intersection.
inline std::vector<NodeId> neighbor_intersection(const Graph& g, NodeId a, NodeId b) {
  auto na = g.neighbors(a);
  auto nb = g.neighbors(b);
  std::vector<NodeId> out;
  std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(out));
  return out;
}

/// Scans consecutive position pairs (2i, 2i+1) of the execution order and
/// emits a SharedPair wherever the neighbor intersection has at least two
/// nodes. Each node appears in at most one pair by construction.
inline std::vector<SharedPair> find_shared_pairs(const Graph& g, const Permutation& perm) {
  std::vector<SharedPair> pairs;
  for (std::size_t i = 0; i + 1 < perm.order.size(); i += 2) {
    NodeId a = perm.order[i];
    NodeId b = perm.order[i + 1];
    std::vector<NodeId> shared = neighbor_intersection(g, a, b);
    if (shared.size() >= 2) {
      pairs.push_back(SharedPair{a, b, std::move(shared)});
    }
  }
  return pairs;
}

inline ExecutionPlan make_execution_plan(const Graph& g, Strategy strategy, const LshParams& params) {
  ExecutionPlan plan;
  plan.strategy = strategy;
  switch (strategy) {
    case Strategy::IndexOrder:
      plan.permutation = Permutation::identity(g.num_nodes());
      break;
    case Strategy::LR:
      plan.permutation = reorder_lsh(g, params);
      break;
    case Strategy::LR_CR:
      plan.permutation = reorder_lsh(g, params);
      plan.shared_pairs = find_shared_pairs(g, plan.permutation);
      break;
  }
  return plan;
}

// --- Reuse distance ---------------------------------------------------------

/// Histogram of node-feature reuse distances under a traversal order.
/// The distance of an access is the number of node visits since the same
/// feature vector was last touched (0 = touched during the previous visit);
/// first-ever accesses land in the infinity bucket. Finite distances are
/// bucketed by powers of two: bucket 0 holds distance 0, bucket k holds
/// [2^(k-1), 2^k).
struct ReuseProfile {
  std::vector<std::uint64_t> buckets;
  std::uint64_t infinite = 0;
  std::uint64_t finite_count = 0;
  double finite_sum = 0.0;

  double mean_finite() const { return finite_count == 0 ? 0.0 : finite_sum / static_cast<double>(finite_count); }

  static std::size_t bucket_index(std::uint64_t d) {
    if (d == 0) return 0;
    std::size_t k = 0;
    while (d > 0) {
      d >>= 1;
      ++k;
    }
    return k;  // 1 + floor(log2(d))
  }
};

inline ReuseProfile reuse_distance_profile(const Graph& g, const Permutation& perm) {
  ReuseProfile prof;
  std::unordered_map<NodeId, std::uint64_t> last_step;
  last_step.reserve(g.num_nodes());
  for (std::uint64_t step = 0; step < perm.order.size(); ++step) {
    NodeId v = perm.order[step];
    for (NodeId u : g.neighbors(v)) {
      auto it = last_step.find(u);
      if (it == last_step.end()) {
        prof.infinite++;
      } else {
        std::uint64_t d = step - it->second - 1;
        std::size_t b = ReuseProfile::bucket_index(d);
        if (prof.buckets.size() <= b) prof.buckets.resize(b + 1, 0);
        prof.buckets[b]++;
        prof.finite_count++;
        prof.finite_sum += static_cast<double>(d);
      }
      last_step[u] = step;
    }
  }
  return prof;
}

// --- Text formats -----------------------------------------------------------

/// One original node id per line, in execution order.
inline void save_permutation(const Graph& g, const Permutation& perm, std::ostream& out) {
  for (NodeId v : perm.order) out << g.original_id(v) << '\n';
}

/// Lines of "a b : n1 n2 ..." (original ids, consumers then shared set).
inline void save_shared_pairs(const Graph& g, const std::vector<SharedPair>& pairs, std::ostream& out) {
  for (const auto& p : pairs) {
    out << g.original_id(p.first_consumer) << ' ' << g.original_id(p.second_consumer) << " :";
    for (NodeId u : p.shared_set) out << ' ' << g.original_id(u);
    out << '\n';
  }
}

}  // namespace rubik
