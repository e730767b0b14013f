#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rubik/errors.hpp"
#include "rubik/graph.hpp"
#include "rubik/reorder.hpp"
#include "rubik/rng.hpp"

namespace rubik {

enum class Aggregator { Sum, Mean, Max };
enum class UpdateKind { SageConcat, GinMlp, Linear };
enum class Activation { Relu, None };

struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;  // row-major

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0f) {}
  float& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  float at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// One GCN layer: an aggregator over the previous layer's neighbor features
/// plus an update transform. Linear layers are update-only (no aggregation
/// work at all); SageConcat consumes concat(h, a); GinMlp consumes
/// (1+eps)*h + a through a two-matrix MLP.
struct LayerSpec {
  std::uint32_t in_dim = 0;
  std::uint32_t out_dim = 0;
  Aggregator aggregator = Aggregator::Sum;
  UpdateKind update_kind = UpdateKind::Linear;
  Activation activation = Activation::None;
  float epsilon = 0.0f;  // GinMlp only
  DenseMatrix w1;        // SageConcat: out x 2in; GinMlp: out x in; Linear: out x in
  std::vector<float> b1;
  DenseMatrix w2;        // GinMlp only: out x out
  std::vector<float> b2;

  bool aggregates() const { return update_kind != UpdateKind::Linear; }

  std::size_t mac_count_update() const {
    switch (update_kind) {
      case UpdateKind::SageConcat: return 2ull * in_dim * out_dim;
      case UpdateKind::GinMlp: return static_cast<std::size_t>(in_dim) * out_dim + static_cast<std::size_t>(out_dim) * out_dim;
      case UpdateKind::Linear: return static_cast<std::size_t>(in_dim) * out_dim;
    }
    return 0;
  }

  std::size_t weight_bytes() const {
    std::size_t elems = w1.values.size() + b1.size() + w2.values.size() + b2.size();
    return elems * sizeof(float);
  }

  void validate() const {
    auto expect = [this](bool ok, const char* what) {
      if (!ok) throw ShapeError(std::string("LayerSpec: bad ") + what);
    };
    switch (update_kind) {
      case UpdateKind::SageConcat:
        expect(w1.rows == out_dim && w1.cols == 2ull * in_dim, "SageConcat w1 shape");
        expect(b1.size() == out_dim, "SageConcat bias");
        break;
      case UpdateKind::GinMlp:
        expect(w1.rows == out_dim && w1.cols == in_dim, "GinMlp w1 shape");
        expect(w2.rows == out_dim && w2.cols == out_dim, "GinMlp w2 shape");
        expect(b1.size() == out_dim && b2.size() == out_dim, "GinMlp biases");
        expect(std::isfinite(epsilon), "GinMlp epsilon");
        break;
      case UpdateKind::Linear:
        expect(w1.rows == out_dim && w1.cols == in_dim, "Linear weight shape");
        expect(b1.size() == out_dim, "Linear bias");
        break;
    }
  }
};

struct ModelSpec {
  std::string name;
  std::uint64_t weight_seed = 0;
  std::vector<LayerSpec> layers;

  void validate() const {
    for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
      if (layers[k].out_dim != layers[k + 1].in_dim) {
        throw ShapeError("ModelSpec: layer " + std::to_string(k) + " out_dim does not chain into layer " +
                         std::to_string(k + 1));
      }
    }
    for (const auto& l : layers) l.validate();
  }
};

namespace detail {

inline void fill_uniform(DenseMatrix& m, Rng& rng) {
  for (auto& x : m.values) x = static_cast<float>(rng.uniform(-0.1, 0.1));
}

inline void fill_uniform(std::vector<float>& v, Rng& rng) {
  for (auto& x : v) x = static_cast<float>(rng.uniform(-0.1, 0.1));
}

}  // namespace detail

/// (Re)generates all weights from the model's seed; layer k draws from an
/// independent substream so inserting a layer does not shift the others.
inline void init_weights(ModelSpec& model) {
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    LayerSpec& l = model.layers[k];
    Rng rng(mix_seed(model.weight_seed, 0x3e1000 + k));
    switch (l.update_kind) {
      case UpdateKind::SageConcat:
        l.w1 = DenseMatrix(l.out_dim, 2ull * l.in_dim);
        l.b1.assign(l.out_dim, 0.0f);
        detail::fill_uniform(l.w1, rng);
        detail::fill_uniform(l.b1, rng);
        break;
      case UpdateKind::GinMlp:
        l.w1 = DenseMatrix(l.out_dim, l.in_dim);
        l.b1.assign(l.out_dim, 0.0f);
        l.w2 = DenseMatrix(l.out_dim, l.out_dim);
        l.b2.assign(l.out_dim, 0.0f);
        detail::fill_uniform(l.w1, rng);
        detail::fill_uniform(l.b1, rng);
        detail::fill_uniform(l.w2, rng);
        detail::fill_uniform(l.b2, rng);
        break;
      case UpdateKind::Linear:
        l.w1 = DenseMatrix(l.out_dim, l.in_dim);
        l.b1.assign(l.out_dim, 0.0f);
        detail::fill_uniform(l.w1, rng);
        detail::fill_uniform(l.b1, rng);
        break;
    }
  }
}

// --- Built-in models ---------------------------------------------------------

/// 2 SageConcat layers, mean aggregation, hidden width 256 by default.
inline ModelSpec make_graphsage(std::uint32_t input_dim, std::uint32_t hidden = 256, std::uint64_t seed = 1) {
  ModelSpec m;
  m.name = "graphsage";
  m.weight_seed = seed;
  LayerSpec l1;
  l1.in_dim = input_dim;
  l1.out_dim = hidden;
  l1.aggregator = Aggregator::Mean;
  l1.update_kind = UpdateKind::SageConcat;
  l1.activation = Activation::Relu;
  LayerSpec l2 = l1;
  l2.in_dim = hidden;
  l2.activation = Activation::None;
  m.layers = {l1, l2};
  init_weights(m);
  return m;
}

/// 5 GinMlp layers plus 2 Linear layers, sum aggregation, hidden width 128
/// by default.
inline ModelSpec make_gin(std::uint32_t input_dim, std::uint32_t hidden = 128, std::uint64_t seed = 1) {
  ModelSpec m;
  m.name = "gin";
  m.weight_seed = seed;
  for (int k = 0; k < 5; ++k) {
    LayerSpec l;
    l.in_dim = k == 0 ? input_dim : hidden;
    l.out_dim = hidden;
    l.aggregator = Aggregator::Sum;
    l.update_kind = UpdateKind::GinMlp;
    l.activation = Activation::Relu;
    l.epsilon = 0.0f;
    m.layers.push_back(l);
  }
  for (int k = 0; k < 2; ++k) {
    LayerSpec l;
    l.in_dim = hidden;
    l.out_dim = hidden;
    l.update_kind = UpdateKind::Linear;
    l.activation = k == 0 ? Activation::Relu : Activation::None;
    m.layers.push_back(l);
  }
  init_weights(m);
  return m;
}

struct BuiltinModels {
  ModelSpec graphsage;
  ModelSpec gin;
};

inline BuiltinModels builtin_models(std::uint32_t input_dim, std::optional<std::uint32_t> hidden_override = {},
                                    std::uint64_t seed = 1) {
  return BuiltinModels{make_graphsage(input_dim, hidden_override.value_or(256), seed),
                       make_gin(input_dim, hidden_override.value_or(128), seed)};
}

// --- Reference kernels --------------------------------------------------------

/// Neighbor reduction for one node over the previous layer's features.
/// An empty neighborhood yields the zero vector for every aggregator.
inline std::vector<float> aggregate(const Graph& g, const FeatureMatrix& features, NodeId v, Aggregator agg) {
  std::vector<float> acc(features.dim, 0.0f);
  auto nbrs = g.neighbors(v);
  if (nbrs.empty()) return acc;
  bool first = true;
  for (NodeId u : nbrs) {
    auto row = features.row(u);
    if (agg == Aggregator::Max) {
      if (first) {
        std::copy(row.begin(), row.end(), acc.begin());
      } else {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = std::max(acc[i], row[i]);
      }
    } else {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += row[i];
    }
    first = false;
  }
  if (agg == Aggregator::Mean) {
    float inv = 1.0f / static_cast<float>(nbrs.size());
    for (auto& x : acc) x *= inv;
  }
  return acc;
}

namespace detail {

inline void matvec(const DenseMatrix& w, std::span<const float> x, const std::vector<float>& b,
                   std::vector<float>& out) {
  if (w.cols != x.size()) throw ShapeError("matvec: dimension mismatch");
  out.assign(w.rows, 0.0f);
  for (std::size_t r = 0; r < w.rows; ++r) {
    float acc = 0.0f;
    const float* wr = w.values.data() + r * w.cols;
    for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * x[c];
    out[r] = acc + (b.empty() ? 0.0f : b[r]);
  }
}

inline void apply_activation(std::vector<float>& v, Activation act) {
  if (act == Activation::Relu) {
    for (auto& x : v) x = std::max(x, 0.0f);
  }
}

}  // namespace detail

/// Update transform of one node: combines the previous state and the
/// aggregation result according to the layer kind.
inline std::vector<float> update(std::span<const float> h, std::span<const float> a, const LayerSpec& layer) {
  if (h.size() != layer.in_dim) throw ShapeError("update: h dimension mismatch");
  std::vector<float> out;
  switch (layer.update_kind) {
    case UpdateKind::SageConcat: {
      if (a.size() != layer.in_dim) throw ShapeError("update: a dimension mismatch");
      std::vector<float> cat(2ull * layer.in_dim);
      std::copy(h.begin(), h.end(), cat.begin());
      std::copy(a.begin(), a.end(), cat.begin() + layer.in_dim);
      detail::matvec(layer.w1, cat, layer.b1, out);
      detail::apply_activation(out, layer.activation);
      break;
    }
    case UpdateKind::GinMlp: {
      if (a.size() != layer.in_dim) throw ShapeError("update: a dimension mismatch");
      std::vector<float> t(layer.in_dim);
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = (1.0f + layer.epsilon) * h[i] + a[i];
      std::vector<float> z1;
      detail::matvec(layer.w1, t, layer.b1, z1);
      detail::apply_activation(z1, layer.activation);
      detail::matvec(layer.w2, z1, layer.b2, out);
      detail::apply_activation(out, layer.activation);
      break;
    }
    case UpdateKind::Linear: {
      detail::matvec(layer.w1, h, layer.b1, out);
      detail::apply_activation(out, layer.activation);
      break;
    }
  }
  return out;
}

/// Layer-synchronous forward pass: layer k reads only layer k-1 features,
/// visiting nodes in the given execution order (identity when null). The
/// result is independent of the order because per-node work is independent
/// within a layer.
inline FeatureMatrix forward(const Graph& g, const FeatureMatrix& input, const ModelSpec& model,
                             const Permutation* order = nullptr) {
  model.validate();
  if (model.layers.empty()) return input;
  if (model.layers.front().in_dim != input.dim) throw ShapeError("forward: input dim does not match layer 0");
  if (input.num_nodes != g.num_nodes()) throw ShapeError("forward: feature row count does not match graph");
  if (order && order->size() != g.num_nodes()) throw ShapeError("forward: permutation size mismatch");

  FeatureMatrix h = input;
  for (const LayerSpec& layer : model.layers) {
    FeatureMatrix next(g.num_nodes(), layer.out_dim);
    for (std::size_t pos = 0; pos < g.num_nodes(); ++pos) {
      NodeId v = order ? order->order[pos] : static_cast<NodeId>(pos);
      std::vector<float> a;
      if (layer.aggregates()) a = aggregate(g, h, v, layer.aggregator);
      std::vector<float> hv = update(h.row(v), a, layer);
      std::copy(hv.begin(), hv.end(), next.row(v).begin());
    }
    h = std::move(next);
  }
  return h;
}

}  // namespace rubik
