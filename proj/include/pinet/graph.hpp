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

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pinet/error.hpp"
#include "pinet/tensor.hpp"

namespace pinet {

using Edge = std::pair<std::size_t, std::size_t>;

/// A graph zero-padded to N nodes: adjacency is N×N and symmetric with a
/// zero diagonal, features are N×d, and every row/column at index ≥ n_real
/// is zero in both.
struct LabeledGraph {
  std::size_t n_real = 0;
  Mat adjacency;
  Mat features;
  std::size_t label = 0;

  std::size_t padded_size() const { return adjacency.rows(); }
  std::size_t feature_width() const { return features.cols(); }

  /// Undirected edge list over real nodes, each edge once with i < j.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < n_real; ++i)
      for (std::size_t j = i + 1; j < n_real; ++j)
        if (adjacency(i, j) != 0.0) out.emplace_back(i, j);
    return out;
  }

  /// Builds a graph from an edge list. Edges are symmetrised and self-loops
  /// dropped. `features` must have n rows; pass an empty Mat for a single
  /// all-ones column. `padded` defaults to n.
  static LabeledGraph from_edges(std::size_t n, std::span<const Edge> edge_list, Mat features, std::size_t label,
                                 std::size_t padded = 0) {
    if (padded == 0) padded = n;
    if (padded < n) throw DomainError("LabeledGraph: pad size smaller than node count");
    if (features.empty()) features = Mat(n, 1, 1.0);
    if (features.rows() != n) {
      throw ShapeError("LabeledGraph: feature matrix " + shape_str(features) + " for " + std::to_string(n) + " nodes");
    }
    LabeledGraph g;
    g.n_real = n;
    g.label = label;
    g.adjacency = Mat(padded, padded);
    for (const auto& [a, b] : edge_list) {
      if (a >= n || b >= n) throw DomainError("LabeledGraph: edge endpoint out of range");
      if (a == b) continue;
      g.adjacency(a, b) = 1.0;
      g.adjacency(b, a) = 1.0;
    }
    g.features = Mat(padded, features.cols());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < features.cols(); ++f) g.features(i, f) = features(i, f);
    return g;
  }

  friend bool operator==(const LabeledGraph&, const LabeledGraph&) = default;
};

/// Throws unless `g` satisfies the LabeledGraph invariants.
inline void validate(const LabeledGraph& g) {
  const std::size_t n = g.padded_size();
  if (g.adjacency.cols() != n) throw ShapeError("graph: adjacency is not square: " + shape_str(g.adjacency));
  if (g.features.rows() != n) throw ShapeError("graph: feature rows do not match adjacency");
  if (g.n_real > n) throw DomainError("graph: n_real exceeds pad size");
  for (std::size_t i = 0; i < n; ++i) {
    if (g.adjacency(i, i) != 0.0) throw DomainError("graph: nonzero diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = g.adjacency(i, j);
      if (v != 0.0 && v != 1.0) throw DomainError("graph: adjacency entry not in {0,1}");
      if (v != g.adjacency(j, i)) throw DomainError("graph: adjacency not symmetric");
      if (v != 0.0 && (i >= g.n_real || j >= g.n_real)) throw DomainError("graph: edge touches a padded node");
    }
    if (i >= g.n_real)
      for (double f : g.features.row(i))
        if (f != 0.0) throw DomainError("graph: padded node has nonzero features");
  }
}

/// true for real nodes, false for padding.
inline std::vector<bool> node_mask(const LabeledGraph& g) {
  std::vector<bool> mask(g.padded_size(), false);
  for (std::size_t i = 0; i < g.n_real; ++i) mask[i] = true;
  return mask;
}

// ---------------------------------------------------------------------------
// Permutations
// ---------------------------------------------------------------------------

/// Bijection on {0..n-1}; the object at position i moves to position
/// mapping[i].
struct Permutation {
  std::vector<std::size_t> mapping;

  static Permutation identity(std::size_t n) {
    Permutation p;
    p.mapping.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.mapping[i] = i;
    return p;
  }

  std::size_t size() const { return mapping.size(); }

  bool is_valid() const {
    std::vector<bool> seen(mapping.size(), false);
    for (std::size_t v : mapping) {
      if (v >= mapping.size() || seen[v]) return false;
      seen[v] = true;
    }
    return true;
  }

  Permutation inverse() const {
    Permutation inv;
    inv.mapping.resize(mapping.size());
    for (std::size_t i = 0; i < mapping.size(); ++i) inv.mapping[mapping[i]] = i;
    return inv;
  }

  /// P with [P·X]_ij = X_{π⁻¹(i), j}.
  Mat matrix() const {
    Mat p(size(), size());
    for (std::size_t k = 0; k < size(); ++k) p(mapping[k], k) = 1.0;
    return p;
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;
};

/// Uniform Fisher–Yates shuffle driven by `rng`.
template <typename Rng>
Permutation random_permutation(std::size_t n, Rng& rng) {
  if (n == 0) throw DomainError("random_permutation: n must be at least 1");
  Permutation p = Permutation::identity(n);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(p.mapping[i], p.mapping[pick(rng)]);
  }
  return p;
}

inline Permutation random_permutation(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_permutation(n, rng);
}

/// Relabels nodes: the result is (P A Pᵀ, P X) with the label unchanged.
/// n_real is kept, so a permutation that moves real nodes into padded slots
/// yields a graph whose real nodes are no longer a leading block; the model
/// only relies on the node mask, which is permuted with it via
/// permute_mask.
inline LabeledGraph permute_graph(const LabeledGraph& g, const Permutation& perm) {
  const std::size_t n = g.padded_size();
  if (perm.size() != n) {
    throw DomainError("permute_graph: permutation of size " + std::to_string(perm.size()) + " for graph with N=" +
                      std::to_string(n));
  }
  if (!perm.is_valid()) throw DomainError("permute_graph: mapping is not a bijection");
  LabeledGraph out;
  out.n_real = g.n_real;
  out.label = g.label;
  out.adjacency = Mat(n, n);
  out.features = Mat(n, g.feature_width());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pi = perm.mapping[i];
    for (std::size_t j = 0; j < n; ++j) out.adjacency(pi, perm.mapping[j]) = g.adjacency(i, j);
    for (std::size_t f = 0; f < g.feature_width(); ++f) out.features(pi, f) = g.features(i, f);
  }
  return out;
}

inline std::vector<bool> permute_mask(const std::vector<bool>& mask, const Permutation& perm) {
  if (perm.size() != mask.size()) throw DomainError("permute_mask: size mismatch");
  std::vector<bool> out(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) out[perm.mapping[i]] = mask[i];
  return out;
}

/// Zero-extends (or trims trailing padding from) a graph to n_target nodes.
inline LabeledGraph pad_graph(const LabeledGraph& g, std::size_t n_target) {
  if (n_target < g.n_real) {
    throw DomainError("pad_graph: target " + std::to_string(n_target) + " is smaller than the " +
                      std::to_string(g.n_real) + " real nodes");
  }
  const std::size_t keep = std::min(n_target, g.padded_size());
  LabeledGraph out;
  out.n_real = g.n_real;
  out.label = g.label;
  out.adjacency = Mat(n_target, n_target);
  out.features = Mat(n_target, g.feature_width());
  for (std::size_t i = 0; i < keep; ++i) {
    for (std::size_t j = 0; j < keep; ++j) out.adjacency(i, j) = g.adjacency(i, j);
    for (std::size_t f = 0; f < g.feature_width(); ++f) out.features(i, f) = g.features(i, f);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Degree and propagation matrices
// ---------------------------------------------------------------------------

inline Mat degree_matrix(const Mat& a) {
  if (a.rows() != a.cols()) throw ShapeError("degree_matrix: adjacency must be square, got " + shape_str(a));
  Mat d(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (double v : a.row(i)) d(i, i) += v;
  return d;
}

namespace detail {

inline void check_propagation_args(const Mat& a, double p, double q) {
  if (a.rows() != a.cols()) throw ShapeError("propagation_matrix: adjacency must be square, got " + shape_str(a));
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("propagation_matrix: p=" + std::to_string(p) + " outside [0,1]");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("propagation_matrix: q=" + std::to_string(q) + " outside [0,1]");
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double v = a(i, j);
      if ((v != 0.0 && v != 1.0) || v != a(j, i)) {
        throw DomainError("propagation_matrix: adjacency must be symmetric with entries in {0,1}");
      }
    }
}

// Diagonal of (pI + (1−p)D)^(−1/2), with 0^(−1/2) taken as 0, and its
// derivative with respect to p.
struct NormScale {
  std::vector<double> s;
  std::vector<double> ds_dp;
};

inline NormScale norm_scale(const Mat& a, double p) {
  NormScale out;
  out.s.resize(a.rows());
  out.ds_dp.resize(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double deg = 0.0;
    for (double v : a.row(i)) deg += v;
    const double base = p + (1.0 - p) * deg;
    if (base > 0.0) {
      out.s[i] = 1.0 / std::sqrt(base);
      out.ds_dp[i] = -0.5 * (1.0 - deg) * out.s[i] / base;
    }
  }
  return out;
}

}  // namespace detail

/// Ã = (pI + (1−p)D)^(−1/2) (A + qI) (pI + (1−p)D)^(−1/2), where D is the
/// degree matrix of A (not of A + qI). Zero diagonal entries of
/// pI + (1−p)D map to 0 instead of infinity.
inline Mat propagation_matrix(const Mat& a, double p, double q) {
  detail::check_propagation_args(a, p, q);
  const auto ns = detail::norm_scale(a, p);
  Mat out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double m = a(i, j) + (i == j ? q : 0.0);
      if (m != 0.0) out(i, j) = ns.s[i] * m * ns.s[j];
    }
  return out;
}

/// Recorded variant, differentiable in p and q (both 1×1).
inline Var propagation_matrix(const Mat& a, Var p, Var q) {
  Tape& t = detail::same_tape(p, q, "propagation_matrix");
  const double pv = p.value()(0, 0);
  const double qv = q.value()(0, 0);
  Mat value = propagation_matrix(a, pv, qv);
  auto ns = detail::norm_scale(a, pv);
  // Only the nonzero pattern of A + qI matters in backward.
  std::vector<std::pair<std::size_t, std::size_t>> support;
  std::vector<double> weights;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double m = a(i, j) + (i == j ? qv : 0.0);
      if (m != 0.0) {
        support.emplace_back(i, j);
        weights.push_back(m);
      }
    }
  return t.record(OpKind::Custom, {p, q}, std::move(value),
                  [ns = std::move(ns), support = std::move(support), weights = std::move(weights)](
                      const Mat& g, std::span<Mat* const> pg) {
                    if (pg[0]) {
                      double dp = 0.0;
                      for (std::size_t k = 0; k < support.size(); ++k) {
                        const auto [i, j] = support[k];
                        dp += g(i, j) * weights[k] * (ns.ds_dp[i] * ns.s[j] + ns.s[i] * ns.ds_dp[j]);
                      }
                      (*pg[0])(0, 0) += dp;
                    }
                    if (pg[1]) {
                      double dq = 0.0;
                      for (std::size_t i = 0; i < ns.s.size(); ++i) dq += g(i, i) * ns.s[i] * ns.s[i];
                      (*pg[1])(0, 0) += dq;
                    }
                  });
}

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

struct Batch {
  std::vector<LabeledGraph> graphs;
  std::vector<std::vector<bool>> masks;
  Mat labels;  // one-hot, B×C
};

inline Batch make_batch(std::span<const LabeledGraph> graphs, std::size_t class_count) {
  if (graphs.empty()) throw ShapeError("make_batch: no graphs");
  if (class_count == 0) throw DomainError("make_batch: class count must be positive");
  const std::size_t n = graphs.front().padded_size();
  const std::size_t d = graphs.front().feature_width();
  Batch b;
  b.labels = Mat(graphs.size(), class_count);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const LabeledGraph& g = graphs[i];
    if (g.padded_size() != n || g.feature_width() != d) {
      throw ShapeError("make_batch: graph " + std::to_string(i) + " has shape N=" + std::to_string(g.padded_size()) +
                       ", d=" + std::to_string(g.feature_width()) + "; expected N=" + std::to_string(n) +
                       ", d=" + std::to_string(d));
    }
    if (g.label >= class_count) throw DomainError("make_batch: label out of range");
    b.labels(i, g.label) = 1.0;
    b.masks.push_back(node_mask(g));
    b.graphs.push_back(g);
  }
  return b;
}

}  // namespace pinet
