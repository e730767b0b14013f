#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "rubik/errors.hpp"
#include "rubik/graph.hpp"
#include "rubik/hardware.hpp"
#include "rubik/model.hpp"
#include "rubik/reorder.hpp"

namespace rubik {

// --- Graph-level mapping ------------------------------------------------------

/// Result of slicing the execution order into windows and dealing them to PEs.
/// Window w goes to PE (w mod num_pes); a PE executes its windows in order.
struct PeAssignment {
  std::vector<std::vector<NodeId>> pe_nodes;  // per PE, execution order preserved
  std::size_t window_size = 0;
  std::size_t num_windows = 0;
};

/// One window per PE, rounded up to the next even size (shared-pair
/// consumers sit at positions (2i, 2i+1) and must not straddle windows).
inline std::size_t default_window_size(std::size_t num_nodes, std::size_t num_pes) {
  std::size_t w = num_pes == 0 ? num_nodes : (num_nodes + num_pes - 1) / num_pes;
  if (w < 2) w = 2;
  if (w % 2 != 0) ++w;
  return w;
}

inline PeAssignment assign_windows(const ExecutionPlan& plan, std::size_t num_pes, std::size_t window_size) {
  if (num_pes == 0) throw ArgumentError("assign_windows: num_pes must be > 0");
  if (window_size < 2 || window_size % 2 != 0) {
    throw ArgumentError("assign_windows: window_size must be even and >= 2");
  }
  PeAssignment out;
  out.window_size = window_size;
  out.pe_nodes.resize(num_pes);
  const auto& order = plan.permutation.order;
  for (std::size_t start = 0; start < order.size(); start += window_size) {
    std::size_t end = std::min(start + window_size, order.size());
    auto& dst = out.pe_nodes[out.num_windows % num_pes];
    dst.insert(dst.end(), order.begin() + start, order.begin() + end);
    out.num_windows++;
  }
  return out;
}

// --- Node-level mapping ------------------------------------------------------

struct Tile {
  std::uint32_t out_lo = 0, out_hi = 0;  // [out_lo, out_hi)
  std::uint32_t in_lo = 0, in_hi = 0;    // [in_lo, in_hi)
};

/// Output-stationary tiling of a vector-matrix product onto the MAC array:
/// ceil(out/mac_rows) x ceil(in/mac_cols) tiles, row-major over output then
/// input blocks, one cycle per tile.
struct TilePlan {
  std::uint32_t in_dim = 0, out_dim = 0;
  std::uint32_t mac_rows = 0, mac_cols = 0;
  std::vector<Tile> tiles;
  std::uint32_t cycles_per_tile = 1;

  std::size_t num_tiles() const { return tiles.size(); }
  std::size_t total_cycles() const { return tiles.size() * cycles_per_tile; }
};

inline TilePlan tile_matvec(std::uint32_t in_dim, std::uint32_t out_dim, std::uint32_t mac_rows,
                            std::uint32_t mac_cols) {
  if (in_dim == 0 || out_dim == 0 || mac_rows == 0 || mac_cols == 0) {
    throw ArgumentError("tile_matvec: all dimensions must be >= 1");
  }
  TilePlan plan;
  plan.in_dim = in_dim;
  plan.out_dim = out_dim;
  plan.mac_rows = mac_rows;
  plan.mac_cols = mac_cols;
  for (std::uint32_t o = 0; o < out_dim; o += mac_rows) {
    for (std::uint32_t i = 0; i < in_dim; i += mac_cols) {
      plan.tiles.push_back(Tile{o, std::min(o + mac_rows, out_dim), i, std::min(i + mac_cols, in_dim)});
    }
  }
  return plan;
}

// --- Per-PE work manifests ---------------------------------------------------

/// Aggregation and update work for one node within one layer.
struct NodeTask {
  NodeId node = 0;
  // First consumer of a shared pair: fetch these, aggregate them, publish.
  std::vector<NodeId> shared_fetches;
  std::optional<std::uint32_t> publish_pair;  // index into plan.shared_pairs
  // Second consumer: load the published partial instead of its members.
  std::optional<std::uint32_t> consume_pair;
  // Neighbors fetched individually in every case.
  std::vector<NodeId> residual_fetches;

  std::size_t fetch_count() const {
    return shared_fetches.size() + residual_fetches.size() + (consume_pair ? 1 : 0);
  }

  /// Vectors folded into the aggregation accumulator (a loaded partial
  /// counts as one operand).
  std::size_t agg_operands() const {
    return shared_fetches.size() + residual_fetches.size() + (consume_pair ? 1 : 0);
  }
};

struct LayerManifest {
  std::size_t layer_index = 0;
  std::uint32_t in_dim = 0, out_dim = 0;
  Aggregator aggregator = Aggregator::Sum;
  UpdateKind update_kind = UpdateKind::Linear;
  bool aggregates = false;
  std::vector<TilePlan> update_stages;  // one per matrix-vector product
  std::size_t weight_bytes = 0;
  std::vector<std::vector<NodeTask>> pe_tasks;  // [pe][task]

  std::size_t update_tiles_per_node() const {
    std::size_t t = 0;
    for (const auto& s : update_stages) t += s.num_tiles();
    return t;
  }

  std::size_t update_macs_per_node() const {
    std::size_t m = 0;
    for (const auto& s : update_stages) m += static_cast<std::size_t>(s.in_dim) * s.out_dim;
    return m;
  }

  std::size_t total_agg_operands() const {
    std::size_t ops = 0;
    for (const auto& pe : pe_tasks)
      for (const auto& t : pe) ops += t.agg_operands();
    return ops;
  }

  std::size_t total_fetches() const {
    std::size_t f = 0;
    for (const auto& pe : pe_tasks)
      for (const auto& t : pe) f += t.fetch_count();
    return f;
  }

  /// Element-wise MAC-equivalent aggregation adds over all PEs.
  std::size_t total_agg_mac_ops() const { return total_agg_operands() * in_dim; }

  std::size_t total_update_mac_ops() const {
    std::size_t nodes = 0;
    for (const auto& pe : pe_tasks) nodes += pe.size();
    return nodes * update_macs_per_node();
  }
};

struct ModelManifest {
  PeAssignment assignment;
  std::vector<LayerManifest> layers;
};

namespace detail {

inline std::vector<NodeId> set_difference_sorted(std::span<const NodeId> all, const std::vector<NodeId>& remove) {
  std::vector<NodeId> out;
  std::set_difference(all.begin(), all.end(), remove.begin(), remove.end(), std::back_inserter(out));
  return out;
}

}  // namespace detail

/// Expands one layer into per-PE node tasks. Shared-pair roles only apply
/// when the plan strategy is LR_CR and the layer aggregates; update-only
/// (Linear) layers fetch nothing.
inline LayerManifest plan_layer(const Graph& g, const LayerSpec& layer, std::size_t layer_index,
                                const ExecutionPlan& plan, const PeAssignment& assignment,
                                const HardwareConfig& hw) {
  LayerManifest m;
  m.layer_index = layer_index;
  m.in_dim = layer.in_dim;
  m.out_dim = layer.out_dim;
  m.aggregator = layer.aggregator;
  m.update_kind = layer.update_kind;
  m.aggregates = layer.aggregates();
  m.weight_bytes = layer.weight_bytes();
  switch (layer.update_kind) {
    case UpdateKind::SageConcat:
      m.update_stages = {tile_matvec(2 * layer.in_dim, layer.out_dim, hw.mac_rows, hw.mac_cols)};
      break;
    case UpdateKind::GinMlp:
      m.update_stages = {tile_matvec(layer.in_dim, layer.out_dim, hw.mac_rows, hw.mac_cols),
                         tile_matvec(layer.out_dim, layer.out_dim, hw.mac_rows, hw.mac_cols)};
      break;
    case UpdateKind::Linear:
      m.update_stages = {tile_matvec(layer.in_dim, layer.out_dim, hw.mac_rows, hw.mac_cols)};
      break;
  }

  std::unordered_map<NodeId, std::uint32_t> first_of, second_of;
  if (plan.strategy == Strategy::LR_CR) {
    for (std::uint32_t i = 0; i < plan.shared_pairs.size(); ++i) {
      first_of[plan.shared_pairs[i].first_consumer] = i;
      second_of[plan.shared_pairs[i].second_consumer] = i;
    }
  }

  m.pe_tasks.resize(assignment.pe_nodes.size());
  for (std::size_t pe = 0; pe < assignment.pe_nodes.size(); ++pe) {
    for (NodeId v : assignment.pe_nodes[pe]) {
      NodeTask task;
      task.node = v;
      if (m.aggregates) {
        auto nbrs = g.neighbors(v);
        if (auto it = first_of.find(v); it != first_of.end()) {
          const SharedPair& p = plan.shared_pairs[it->second];
          task.shared_fetches = p.shared_set;
          task.publish_pair = it->second;
          task.residual_fetches = detail::set_difference_sorted(nbrs, p.shared_set);
        } else if (auto it2 = second_of.find(v); it2 != second_of.end()) {
          const SharedPair& p = plan.shared_pairs[it2->second];
          task.consume_pair = it2->second;
          task.residual_fetches = detail::set_difference_sorted(nbrs, p.shared_set);
        } else {
          task.residual_fetches.assign(nbrs.begin(), nbrs.end());
        }
      }
      m.pe_tasks[pe].push_back(std::move(task));
    }
  }
  return m;
}

inline ModelManifest plan_model(const Graph& g, const ModelSpec& model, const ExecutionPlan& plan,
                                const HardwareConfig& hw,
                                std::optional<std::size_t> window_override = {}) {
  ModelManifest mm;
  std::size_t window = window_override.value_or(default_window_size(g.num_nodes(), hw.num_pes()));
  mm.assignment = assign_windows(plan, hw.num_pes(), window);
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    mm.layers.push_back(plan_layer(g, model.layers[k], k, plan, mm.assignment, hw));
  }
  return mm;
}

}  // namespace rubik
