#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rubik/errors.hpp"
#include "rubik/graph.hpp"
#include "rubik/mapper.hpp"
#include "rubik/model.hpp"
#include "rubik/reorder.hpp"

namespace rubik {

enum class Opcode : std::uint8_t { LoadF, LoadI, Comp, Store, StoreI };
enum class CompKind : std::uint8_t { AggAdd, UpdateTile };

/// One micro instruction. Field use by opcode:
///   LoadF:  a = node whose feature vector is loaded
///   LoadI:  (a, b) = canonical (min, max) tag of the shared set, pair_index
///   StoreI: same operands as LoadI, bytes = partial vector size
///   Comp:   comp_kind + count (AggAdd: vectors folded in; UpdateTile: tiles)
///   Store:  a = node stored, bytes = out_dim * element size
struct MicroInstruction {
  Opcode op = Opcode::Comp;
  CompKind comp_kind = CompKind::AggAdd;
  std::uint32_t layer = 0;
  NodeId owner = 0;
  NodeId a = 0;
  NodeId b = 0;
  std::uint32_t pair_index = 0;
  std::uint32_t count = 0;
  std::uint32_t bytes = 0;
};

/// Per-PE ordered instruction lists with per-layer boundaries, plus the
/// shared-pair table the load-i/store-i instructions refer to.
struct InstructionStream {
  std::size_t num_pes = 0;
  std::size_t num_layers = 0;
  std::vector<std::vector<MicroInstruction>> pe_instrs;
  // [pe][layer] -> (begin, end) index range into pe_instrs[pe]
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> layer_ranges;
  std::vector<SharedPair> pairs;
};

/// Lowers per-PE manifests to the micro-ISA. Emission order inside a node's
/// block: load-i (second consumer), shared load-fs + agg + store-i (first
/// consumer), residual load-fs, final agg, update tiles, store.
inline InstructionStream lower(const ModelManifest& manifest, const ExecutionPlan& plan) {
  InstructionStream s;
  s.num_pes = manifest.assignment.pe_nodes.size();
  s.num_layers = manifest.layers.size();
  s.pe_instrs.resize(s.num_pes);
  s.layer_ranges.assign(s.num_pes, {});
  s.pairs = plan.shared_pairs;

  // A pair's consumers must sit in the same PE; windows are even-sized so a
  // violation means the plan was corrupted upstream.
  std::vector<int> pe_of_node(plan.permutation.size(), -1);
  for (std::size_t pe = 0; pe < s.num_pes; ++pe)
    for (NodeId v : manifest.assignment.pe_nodes[pe]) pe_of_node[v] = static_cast<int>(pe);
  for (const SharedPair& p : plan.shared_pairs) {
    if (pe_of_node[p.first_consumer] != pe_of_node[p.second_consumer]) {
      throw CodegenError("lower: shared pair (" + std::to_string(p.first_consumer) + ", " +
                         std::to_string(p.second_consumer) + ") straddles PEs");
    }
  }

  for (std::size_t layer = 0; layer < manifest.layers.size(); ++layer) {
    const LayerManifest& lm = manifest.layers[layer];
    for (std::size_t pe = 0; pe < s.num_pes; ++pe) {
      auto& out = s.pe_instrs[pe];
      std::size_t begin = out.size();
      for (const NodeTask& task : lm.pe_tasks[pe]) {
        auto emit = [&](MicroInstruction mi) {
          mi.layer = static_cast<std::uint32_t>(layer);
          mi.owner = task.node;
          out.push_back(mi);
        };
        const std::uint32_t vec_bytes = lm.in_dim * 4;
        if (task.consume_pair) {
          const SharedPair& p = s.pairs[*task.consume_pair];
          auto [lo, hi] = p.tag();
          emit({Opcode::LoadI, CompKind::AggAdd, 0, 0, lo, hi, *task.consume_pair, 0, 0});
        }
        for (NodeId u : task.shared_fetches) {
          emit({Opcode::LoadF, CompKind::AggAdd, 0, 0, u, 0, 0, 0, 0});
        }
        if (task.publish_pair) {
          emit({Opcode::Comp, CompKind::AggAdd, 0, 0, 0, 0, 0,
                static_cast<std::uint32_t>(task.shared_fetches.size()), 0});
          const SharedPair& p = s.pairs[*task.publish_pair];
          auto [lo, hi] = p.tag();
          emit({Opcode::StoreI, CompKind::AggAdd, 0, 0, lo, hi, *task.publish_pair, 0, vec_bytes});
        }
        for (NodeId u : task.residual_fetches) {
          emit({Opcode::LoadF, CompKind::AggAdd, 0, 0, u, 0, 0, 0, 0});
        }
        std::uint32_t final_operands =
            static_cast<std::uint32_t>(task.residual_fetches.size()) + (task.consume_pair ? 1u : 0u);
        if (final_operands > 0) {
          emit({Opcode::Comp, CompKind::AggAdd, 0, 0, 0, 0, 0, final_operands, 0});
        }
        for (const TilePlan& stage : lm.update_stages) {
          emit({Opcode::Comp, CompKind::UpdateTile, 0, 0, 0, 0, 0,
                static_cast<std::uint32_t>(stage.num_tiles()), 0});
        }
        emit({Opcode::Store, CompKind::AggAdd, 0, 0, task.node, 0, 0, 0, lm.out_dim * 4});
      }
      s.layer_ranges[pe].emplace_back(begin, out.size());
    }
  }
  return s;
}

// --- Census -------------------------------------------------------------------

struct LayerCensus {
  std::uint64_t load_f = 0;
  std::uint64_t load_i = 0;
  std::uint64_t store = 0;
  std::uint64_t store_i = 0;
  std::uint64_t agg_comp_instrs = 0;
  std::uint64_t agg_operands = 0;   // vectors folded into accumulators
  std::uint64_t update_comp_instrs = 0;
  std::uint64_t update_tiles = 0;
};

inline std::vector<LayerCensus> instruction_census(const InstructionStream& s) {
  std::vector<LayerCensus> census(s.num_layers);
  for (const auto& pe : s.pe_instrs) {
    for (const MicroInstruction& mi : pe) {
      LayerCensus& c = census[mi.layer];
      switch (mi.op) {
        case Opcode::LoadF: c.load_f++; break;
        case Opcode::LoadI: c.load_i++; break;
        case Opcode::Store: c.store++; break;
        case Opcode::StoreI: c.store_i++; break;
        case Opcode::Comp:
          if (mi.comp_kind == CompKind::AggAdd) {
            c.agg_comp_instrs++;
            c.agg_operands += mi.count;
          } else {
            c.update_comp_instrs++;
            c.update_tiles += mi.count;
          }
          break;
      }
    }
  }
  return census;
}

// --- Structural replay ----------------------------------------------------------

/// Replays an instruction stream through the reference kernels, honoring the
/// partial-result reuse structure (a loaded partial is folded in as one
/// operand). Matches forward() within floating-point reassociation, which is
/// what the 1e-5 replay-equivalence checks allow for.
inline FeatureMatrix replay_stream(const InstructionStream& s, const Graph& g, const ModelSpec& model,
                                   const FeatureMatrix& input) {
  model.validate();
  FeatureMatrix h = input;
  std::vector<std::vector<float>> partials(s.pairs.size());
  for (std::size_t layer = 0; layer < s.num_layers; ++layer) {
    const LayerSpec& spec = model.layers[layer];
    FeatureMatrix next(g.num_nodes(), spec.out_dim);
    for (auto& p : partials) p.clear();  // partials are layer-local
    for (std::size_t pe = 0; pe < s.num_pes; ++pe) {
      auto [begin, end] = s.layer_ranges[pe][layer];
      std::vector<float> acc(spec.in_dim, 0.0f);
      bool acc_started = false;
      std::vector<NodeId> staged;
      const std::vector<float>* staged_partial = nullptr;

      auto fold = [&](std::span<const float> vec) {
        if (spec.aggregator == Aggregator::Max && !acc_started) {
          std::copy(vec.begin(), vec.end(), acc.begin());
        } else if (spec.aggregator == Aggregator::Max) {
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = std::max(acc[i], vec[i]);
        } else {
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += vec[i];
        }
        acc_started = true;
      };

      for (std::size_t idx = begin; idx < end; ++idx) {
        const MicroInstruction& mi = s.pe_instrs[pe][idx];
        switch (mi.op) {
          case Opcode::LoadF:
            staged.push_back(mi.a);
            break;
          case Opcode::LoadI:
            staged_partial = &partials[mi.pair_index];
            if (staged_partial->empty()) throw CodegenError("replay: load-i before matching store-i");
            break;
          case Opcode::Comp:
            if (mi.comp_kind == CompKind::AggAdd) {
              std::size_t expected = staged.size() + (staged_partial ? 1 : 0);
              if (expected != mi.count) throw CodegenError("replay: agg operand count mismatch");
              if (staged_partial) {
                fold(*staged_partial);
                staged_partial = nullptr;
              }
              for (NodeId u : staged) fold(h.row(u));
              staged.clear();
            }
            break;
          case Opcode::StoreI:
            partials[mi.pair_index] = acc;
            break;
          case Opcode::Store: {
            NodeId v = mi.a;
            std::vector<float> a_v;
            if (spec.aggregates()) {
              a_v = acc;
              if (spec.aggregator == Aggregator::Mean && g.degree(v) > 0) {
                float inv = 1.0f / static_cast<float>(g.degree(v));
                for (auto& x : a_v) x *= inv;
              }
            }
            std::vector<float> hv = update(h.row(v), a_v, spec);
            std::copy(hv.begin(), hv.end(), next.row(v).begin());
            std::fill(acc.begin(), acc.end(), 0.0f);
            acc_started = false;
            break;
          }
        }
      }
    }
    h = std::move(next);
  }
  return h;
}

// --- Trace dump -----------------------------------------------------------------

/// One instruction per line: "PE<k> L<layer> <OPCODE> <args>".
inline void dump_trace(const InstructionStream& s, std::ostream& out) {
  for (std::size_t pe = 0; pe < s.num_pes; ++pe) {
    for (const MicroInstruction& mi : s.pe_instrs[pe]) {
      out << "PE" << pe << " L" << mi.layer << ' ';
      switch (mi.op) {
        case Opcode::LoadF: out << "LOADF " << mi.a; break;
        case Opcode::LoadI: out << "LOADI " << mi.a << ' ' << mi.b; break;
        case Opcode::Comp:
          out << (mi.comp_kind == CompKind::AggAdd ? "COMP AGG " : "COMP UPD ") << mi.count;
          break;
        case Opcode::StoreI: out << "STOREI " << mi.a << ' ' << mi.b << ' ' << mi.bytes; break;
        case Opcode::Store: out << "STORE " << mi.a << ' ' << mi.bytes; break;
      }
      out << '\n';
    }
  }
}

}  // namespace rubik
