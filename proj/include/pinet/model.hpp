// Copyright 2026 The PiNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The PiNet graph classifier. Two parallel two-layer message-passing stacks
// read the same graph: the features stack yields per-node latent features
// (N×F1), the attention stack yields per-node weights (F1×N, softmax over
// nodes). Their product pools the nodes into an F1×F1 graph representation
// that does not depend on node order, which a dense layer maps to class
// probabilities.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pinet/error.hpp"
#include "pinet/graph.hpp"
#include "pinet/tensor.hpp"

namespace pinet {

enum class AttentionAxis { Nodes, Features };

/// The four message-passing layers, each with its own (p, q).
enum class MpLayer : std::size_t { Attention0 = 0, Attention1 = 1, Features0 = 2, Features1 = 3 };
inline constexpr std::array<MpLayer, 4> kMpLayers = {MpLayer::Attention0, MpLayer::Attention1, MpLayer::Features0,
                                                     MpLayer::Features1};

struct PQ {
  double p = 0.5;
  double q = 0.5;
  friend bool operator==(const PQ&, const PQ&) = default;
};

struct PiNetConfig {
  std::size_t input_width = 1;   // d
  std::size_t class_count = 2;   // C
  std::size_t width0 = 100;      // F0
  std::size_t width1 = 64;       // F1
  AttentionAxis attention_axis = AttentionAxis::Nodes;
  bool learn_pq = true;
  PQ fixed_pq{};                 // used in every layer when learn_pq is false
  std::uint64_t seed = 0;
  // Debug only: treat padded nodes as real in the attention softmax.
  bool mask_padding = true;

  void validate() const {
    if (input_width == 0 || class_count == 0 || width0 == 0 || width1 == 0) {
      throw DomainError("PiNetConfig: widths and class count must be positive");
    }
    if (!learn_pq) {
      const PQ& f = fixed_pq;
      if (!(f.p >= 0.0 && f.p <= 1.0 && f.q >= 0.0 && f.q <= 1.0)) {
        throw DomainError("PiNetConfig: fixed p and q must lie in [0,1]");
      }
    }
  }
};

/// Parameter slots. p and q are stored as 1×1 matrices so that every
/// trainable quantity is handled uniformly by the tape and the optimiser.
enum class Slot : std::size_t {
  WX0, WX1, WA0, WA1, WD,
  PA0, QA0, PA1, QA1, PX0, QX0, PX1, QX1,
};
inline constexpr std::size_t kSlotCount = 13;
inline constexpr std::size_t kWeightSlotCount = 5;

inline constexpr std::array<std::string_view, kSlotCount> kSlotNames = {
    "W_X0", "W_X1", "W_A0", "W_A1", "W_D",
    "p_attention0", "q_attention0", "p_attention1", "q_attention1",
    "p_features0", "q_features0", "p_features1", "q_features1",
};

inline constexpr Slot p_slot(MpLayer l) { return static_cast<Slot>(5 + 2 * static_cast<std::size_t>(l)); }
inline constexpr Slot q_slot(MpLayer l) { return static_cast<Slot>(6 + 2 * static_cast<std::size_t>(l)); }
inline constexpr bool is_pq_slot(std::size_t s) { return s >= kWeightSlotCount; }

using SlotArray = std::array<Mat, kSlotCount>;

struct PiNetParams {
  SlotArray tensors;

  Mat& operator[](Slot s) { return tensors[static_cast<std::size_t>(s)]; }
  const Mat& operator[](Slot s) const { return tensors[static_cast<std::size_t>(s)]; }

  const Mat& w_x0() const { return (*this)[Slot::WX0]; }
  const Mat& w_x1() const { return (*this)[Slot::WX1]; }
  const Mat& w_a0() const { return (*this)[Slot::WA0]; }
  const Mat& w_a1() const { return (*this)[Slot::WA1]; }
  const Mat& w_d() const { return (*this)[Slot::WD]; }

  PQ pq(MpLayer l) const { return {(*this)[p_slot(l)](0, 0), (*this)[q_slot(l)](0, 0)}; }
  void set_pq(MpLayer l, PQ v) {
    (*this)[p_slot(l)] = Mat(1, 1, v.p);
    (*this)[q_slot(l)] = Mat(1, 1, v.q);
  }

  friend bool operator==(const PiNetParams&, const PiNetParams&) = default;
};

/// Glorot-uniform weights, bound √(6/(fan_in+fan_out)), drawn in slot order
/// from a generator seeded with config.seed. p = q = 0.5 in learned mode.
inline PiNetParams init_params(const PiNetConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    Mat w(fan_in, fan_out);
    for (double& v : w.data()) v = u(rng);
    return w;
  };
  PiNetParams params;
  params[Slot::WX0] = glorot(config.input_width, config.width0);
  params[Slot::WX1] = glorot(config.width0, config.width1);
  params[Slot::WA0] = glorot(config.input_width, config.width0);
  params[Slot::WA1] = glorot(config.width0, config.width1);
  params[Slot::WD] = glorot(config.width1 * config.width1, config.class_count);
  const PQ start = config.learn_pq ? PQ{} : config.fixed_pq;
  for (MpLayer l : kMpLayers) params.set_pq(l, start);
  return params;
}

/// Projects every p and q onto [0, 1].
inline PiNetParams clamp_pq(PiNetParams params) {
  for (std::size_t s = kWeightSlotCount; s < kSlotCount; ++s) {
    double& v = params.tensors[s](0, 0);
    v = std::clamp(v, 0.0, 1.0);
  }
  return params;
}

// ---------------------------------------------------------------------------
// Forward pass on a tape
// ---------------------------------------------------------------------------

/// Parameters bound to a tape. Weights are differentiable when `trainable`;
/// p and q additionally require config.learn_pq.
struct BoundParams {
  std::array<Var, kSlotCount> vars;

  Var operator[](Slot s) const { return vars[static_cast<std::size_t>(s)]; }
};

inline BoundParams bind_params(Tape& tape, const PiNetConfig& config, const PiNetParams& params, bool trainable) {
  BoundParams b;
  for (std::size_t s = 0; s < kSlotCount; ++s) {
    const bool grad = trainable && (!is_pq_slot(s) || config.learn_pq);
    b.vars[s] = grad ? tape.parameter(params.tensors[s]) : tape.constant(params.tensors[s]);
  }
  return b;
}

namespace detail {

inline void check_graph_shape(const PiNetConfig& config, const LabeledGraph& g, const std::vector<bool>& mask) {
  if (g.feature_width() != config.input_width) {
    throw ShapeError("PiNet: graph has feature width " + std::to_string(g.feature_width()) + ", model expects " +
                     std::to_string(config.input_width));
  }
  if (g.adjacency.rows() != g.adjacency.cols() || g.features.rows() != g.padded_size()) {
    throw ShapeError("PiNet: adjacency " + shape_str(g.adjacency) + " and features " + shape_str(g.features) +
                     " disagree");
  }
  if (mask.size() != g.padded_size()) throw ShapeError("PiNet: node mask length does not match N");
}

// Ã₁ · σ_R(Ã₀ · X · W₀) · W₁: the body shared by both stacks, before their
// output activation.
inline Var two_layer_stack(const BoundParams& b, const LabeledGraph& g, Slot w0, Slot w1, MpLayer l0, MpLayer l1) {
  Tape& t = *b[w0].tape;
  Var x = t.constant(g.features);
  Var a0 = propagation_matrix(g.adjacency, b[p_slot(l0)], b[q_slot(l0)]);
  Var a1 = propagation_matrix(g.adjacency, b[p_slot(l1)], b[q_slot(l1)]);
  Var h = relu(matmul(a0, matmul(x, b[w0])));
  return matmul(a1, matmul(h, b[w1]));
}

}  // namespace detail

/// z_X: N×F1 per-node latent features.
inline Var features_stack(const BoundParams& b, const PiNetConfig& config, const LabeledGraph& g,
                          const std::vector<bool>& mask) {
  detail::check_graph_shape(config, g, mask);
  return relu(detail::two_layer_stack(b, g, Slot::WX0, Slot::WX1, MpLayer::Features0, MpLayer::Features1));
}

/// z_A: F1×N node weights. Padded-node columns are exactly 0.
inline Var attention_stack(const BoundParams& b, const PiNetConfig& config, const LabeledGraph& g,
                           const std::vector<bool>& mask) {
  detail::check_graph_shape(config, g, mask);
  Var pre = transpose(detail::two_layer_stack(b, g, Slot::WA0, Slot::WA1, MpLayer::Attention0, MpLayer::Attention1));
  const std::vector<bool> effective = config.mask_padding ? mask : std::vector<bool>(mask.size(), true);
  if (config.attention_axis == AttentionAxis::Nodes) return softmax_masked(pre, SoftmaxAxis::Rows, effective);
  return mask_columns(softmax_masked(pre, SoftmaxAxis::Cols), effective);
}

/// 1×C class distribution σ_S(g(z_A · z_X) · W_D).
inline Var predict(const BoundParams& b, const PiNetConfig& config, const LabeledGraph& g,
                   const std::vector<bool>& mask) {
  Var pooled = matmul(attention_stack(b, config, g, mask), features_stack(b, config, g, mask));
  return softmax_masked(matmul(reshape_rowmajor(pooled), b[Slot::WD]), SoftmaxAxis::Rows);
}

/// Summed cross-entropy of a batch, recorded on the tape of `b`.
inline Var loss_batch(const BoundParams& b, const PiNetConfig& config, const Batch& batch) {
  if (batch.graphs.empty()) throw ContractError("loss_batch: empty batch");
  std::vector<Var> rows;
  rows.reserve(batch.graphs.size());
  for (std::size_t i = 0; i < batch.graphs.size(); ++i) rows.push_back(predict(b, config, batch.graphs[i], batch.masks[i]));
  return cross_entropy(stack_rows(rows), batch.labels);
}

// ---------------------------------------------------------------------------
// Value-level API
// ---------------------------------------------------------------------------

inline Mat forward_features(const PiNetConfig& config, const PiNetParams& params, const LabeledGraph& g,
                            const std::vector<bool>& mask) {
  Tape t;
  return features_stack(bind_params(t, config, params, false), config, g, mask).value();
}
inline Mat forward_features(const PiNetConfig& config, const PiNetParams& params, const LabeledGraph& g) {
  return forward_features(config, params, g, node_mask(g));
}

inline Mat forward_attention(const PiNetConfig& config, const PiNetParams& params, const LabeledGraph& g,
                             const std::vector<bool>& mask) {
  Tape t;
  return attention_stack(bind_params(t, config, params, false), config, g, mask).value();
}
inline Mat forward_attention(const PiNetConfig& config, const PiNetParams& params, const LabeledGraph& g) {
  return forward_attention(config, params, g, node_mask(g));
}

/// Class probabilities as a 1×C matrix.
inline Mat forward(const PiNetConfig& config, const PiNetParams& params, const LabeledGraph& g,
                   const std::vector<bool>& mask) {
  Tape t;
  return predict(bind_params(t, config, params, false), config, g, mask).value();
}
inline Mat forward(const PiNetConfig& config, const PiNetParams& params, const LabeledGraph& g) {
  return forward(config, params, g, node_mask(g));
}

/// argmax of the class distribution; ties go to the lowest index.
inline std::size_t predicted_class(const Mat& probs) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < probs.cols(); ++c)
    if (probs(0, c) > probs(0, best)) best = c;
  return best;
}

inline double loss_batch(const PiNetConfig& config, const PiNetParams& params, const Batch& batch) {
  Tape t;
  return loss_batch(bind_params(t, config, params, false), config, batch).value()(0, 0);
}

struct LossAndGradients {
  double loss = 0.0;
  SlotArray gradients;  // zero for slots that do not require gradients
};

inline LossAndGradients loss_and_gradients(const PiNetConfig& config, const PiNetParams& params, const Batch& batch) {
  Tape t;
  const BoundParams b = bind_params(t, config, params, true);
  Var loss = loss_batch(b, config, batch);
  const Gradients grads = t.backward(loss);
  LossAndGradients out;
  out.loss = loss.value()(0, 0);
  for (std::size_t s = 0; s < kSlotCount; ++s) out.gradients[s] = grads.of(b.vars[s]);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------
//
// {
//   "format": "pinet-checkpoint", "version": 1,
//   "config": {"input_width", "class_count", "width0", "width1",
//              "attention_axis": "nodes"|"features", "learn_pq",
//              "fixed_pq": {"p", "q"}, "seed"},
//   "params": {"<slot name>": {"rows", "cols", "data": [row-major]} ...}
// }
//
// p and q appear as 1×1 slots named p_attention0 ... q_features1. Doubles are
// written with 17 significant digits, which reads back bit-exactly.

inline constexpr std::string_view kCheckpointFormat = "pinet-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json config_to_json(const PiNetConfig& c) {
  return {{"input_width", c.input_width},
          {"class_count", c.class_count},
          {"width0", c.width0},
          {"width1", c.width1},
          {"attention_axis", c.attention_axis == AttentionAxis::Nodes ? "nodes" : "features"},
          {"learn_pq", c.learn_pq},
          {"fixed_pq", {{"p", c.fixed_pq.p}, {"q", c.fixed_pq.q}}},
          {"seed", c.seed}};
}

inline PiNetConfig config_from_json(const nlohmann::json& j) {
  PiNetConfig c;
  c.input_width = j.at("input_width").get<std::size_t>();
  c.class_count = j.at("class_count").get<std::size_t>();
  c.width0 = j.at("width0").get<std::size_t>();
  c.width1 = j.at("width1").get<std::size_t>();
  const auto axis = j.at("attention_axis").get<std::string>();
  if (axis != "nodes" && axis != "features") throw FormatError("checkpoint: unknown attention_axis '" + axis + "'");
  c.attention_axis = axis == "nodes" ? AttentionAxis::Nodes : AttentionAxis::Features;
  c.learn_pq = j.at("learn_pq").get<bool>();
  c.fixed_pq = {j.at("fixed_pq").at("p").get<double>(), j.at("fixed_pq").at("q").get<double>()};
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

inline nlohmann::json checkpoint_to_json(const PiNetConfig& config, const PiNetParams& params) {
  nlohmann::json tensors = nlohmann::json::object();
  for (std::size_t s = 0; s < kSlotCount; ++s) {
    const Mat& m = params.tensors[s];
    tensors[std::string(kSlotNames[s])] = {
        {"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data().begin(), m.data().end())}};
  }
  return {{"format", kCheckpointFormat}, {"version", kCheckpointVersion}, {"config", config_to_json(config)},
          {"params", tensors}};
}

struct Checkpoint {
  PiNetConfig config;
  PiNetParams params;
};

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) throw FormatError("checkpoint: wrong format tag");
    if (j.at("version").get<int>() != kCheckpointVersion) throw FormatError("checkpoint: unsupported version");
    Checkpoint ck;
    ck.config = config_from_json(j.at("config"));
    const auto& tensors = j.at("params");
    for (std::size_t s = 0; s < kSlotCount; ++s) {
      const auto& t = tensors.at(std::string(kSlotNames[s]));
      ck.params.tensors[s] =
          Mat(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>(), t.at("data").get<std::vector<double>>());
    }
    const auto expect = init_params([&] {
      PiNetConfig shapes = ck.config;
      shapes.seed = 0;
      return shapes;
    }());
    for (std::size_t s = 0; s < kSlotCount; ++s) {
      if (!expect.tensors[s].same_shape(ck.params.tensors[s])) {
        throw FormatError("checkpoint: slot " + std::string(kSlotNames[s]) + " has shape " +
                          shape_str(ck.params.tensors[s]) + ", config implies " + shape_str(expect.tensors[s]));
      }
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const std::string& path, const PiNetConfig& config, const PiNetParams& params) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << checkpoint_to_json(config, params).dump(1) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint '" + path + "': " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace pinet
