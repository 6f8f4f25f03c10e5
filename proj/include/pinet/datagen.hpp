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

// Isomorphism-classification datasets. A connected Erdős–Rényi graph fixes a
// degree sequence; each class gets its own random graph realising exactly
// that sequence, and contributes randomly relabelled copies of it. All
// graphs in the dataset therefore share node count and degree sequence, and
// two graphs share a class iff they are (by construction) isomorphic.

#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "pinet/dataio.hpp"
#include "pinet/error.hpp"
#include "pinet/graph.hpp"
#include "pinet/rng.hpp"

namespace pinet {

struct GenParams {
  std::size_t nodes = 50;       // N
  std::size_t classes = 5;      // C
  std::size_t per_class = 100;  // N_g
  double edge_prob = 0.15;
  std::uint64_t seed = 0;

  void validate() const {
    if (nodes < 2) throw DomainError("GenParams: need at least 2 nodes");
    if (classes < 2) throw DomainError("GenParams: need at least 2 classes");
    if (per_class < 1) throw DomainError("GenParams: need at least 1 graph per class");
    if (!(edge_prob > 0.0 && edge_prob < 1.0)) throw DomainError("GenParams: edge probability must lie in (0,1)");
  }

  friend bool operator==(const GenParams&, const GenParams&) = default;
};

struct DegreeSequence {
  std::vector<std::size_t> degrees;

  static DegreeSequence of(const LabeledGraph& g) {
    DegreeSequence s;
    s.degrees.resize(g.n_real);
    for (std::size_t i = 0; i < g.n_real; ++i)
      for (std::size_t j = 0; j < g.n_real; ++j) s.degrees[i] += g.adjacency(i, j) != 0.0;
    return s;
  }

  std::vector<std::size_t> sorted() const {
    auto s = degrees;
    std::sort(s.begin(), s.end(), std::greater<>());
    return s;
  }

  friend bool operator==(const DegreeSequence&, const DegreeSequence&) = default;
};

/// Erdős–Gallai: a sequence is realisable by a simple graph iff its sum is
/// even and, sorted descending, Σ_{i≤k} d_i ≤ k(k−1) + Σ_{i>k} min(d_i, k)
/// for every k.
inline bool is_graphical(const DegreeSequence& s) {
  const auto d = s.sorted();
  const std::size_t n = d.size();
  if (std::accumulate(d.begin(), d.end(), std::size_t{0}) % 2 != 0) return false;
  if (!d.empty() && d.front() >= n) return false;
  std::size_t lhs = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    lhs += d[k - 1];
    std::size_t rhs = k * (k - 1);
    for (std::size_t i = k; i < n; ++i) rhs += std::min(d[i], k);
    if (lhs > rhs) return false;
  }
  return true;
}

inline bool is_connected(const LabeledGraph& g) {
  if (g.n_real == 0) return true;
  std::vector<bool> seen(g.n_real, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v = 0; v < g.n_real; ++v) {
      if (g.adjacency(u, v) != 0.0 && !seen[v]) {
        seen[v] = true;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == g.n_real;
}

inline constexpr std::size_t kMaxConnectivityRetries = 10000;

/// G(n, p) resampled until connected. Node features are a single ones column.
template <typename Rng>
LabeledGraph sample_er_connected(std::size_t n, double edge_prob, Rng& rng) {
  if (!(edge_prob > 0.0 && edge_prob < 1.0)) throw DomainError("sample_er_connected: edge probability must lie in (0,1)");
  if (n == 0) throw DomainError("sample_er_connected: need at least one node");
  std::bernoulli_distribution coin(edge_prob);
  for (std::size_t attempt = 0; attempt < kMaxConnectivityRetries; ++attempt) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (coin(rng)) edges.emplace_back(i, j);
    auto g = LabeledGraph::from_edges(n, edges, Mat(), 0);
    if (is_connected(g)) return g;
  }
  throw GenerationError("sample_er_connected: no connected G(" + std::to_string(n) + ", " + std::to_string(edge_prob) +
                        ") sample in " + std::to_string(kMaxConnectivityRetries) + " attempts; edge probability too small");
}

inline LabeledGraph sample_er_connected(std::size_t n, double edge_prob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_er_connected(n, edge_prob, rng);
}

/// Deterministic Havel–Hakimi realisation: the node with the largest
/// remaining degree (lowest index on ties) connects to the next-largest ones.
inline std::vector<Edge> havel_hakimi(const DegreeSequence& s) {
  if (!is_graphical(s)) throw DomainError("havel_hakimi: degree sequence is not graphical");
  const std::size_t n = s.degrees.size();
  std::vector<std::size_t> remaining = s.degrees;
  std::vector<std::size_t> order(n);
  std::vector<Edge> edges;
  for (;;) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remaining[a] > remaining[b]; });
    const std::size_t hub = order[0];
    const std::size_t k = remaining[hub];
    if (k == 0) break;
    remaining[hub] = 0;
    for (std::size_t t = 1; t <= k; ++t) {
      const std::size_t v = order[t];
      if (remaining[v] == 0) throw DomainError("havel_hakimi: degree sequence is not graphical");
      --remaining[v];
      edges.emplace_back(std::min(hub, v), std::max(hub, v));
    }
  }
  return edges;
}

/// A random simple graph with exactly the degree sequence `s`: Havel–Hakimi
/// followed by 10·|E| attempted double-edge swaps. A swap replaces (a,b),
/// (c,d) with (a,d), (c,b) and is skipped if that would create a self-loop
/// or a repeated edge.
template <typename Rng>
LabeledGraph graph_from_degree_sequence(const DegreeSequence& s, Rng& rng) {
  std::vector<Edge> edges = havel_hakimi(s);
  const std::size_t n = s.degrees.size();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (const auto& [a, b] : edges) adj[a][b] = adj[b][a] = true;

  if (edges.size() >= 2) {
    std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
    std::bernoulli_distribution flip(0.5);
    const std::size_t attempts = 10 * edges.size();
    for (std::size_t t = 0; t < attempts; ++t) {
      const std::size_t e1 = pick(rng), e2 = pick(rng);
      if (e1 == e2) continue;
      auto [a, b] = edges[e1];
      auto [c, d] = edges[e2];
      if (flip(rng)) std::swap(c, d);
      if (a == d || c == b || adj[a][d] || adj[c][b]) continue;
      adj[a][b] = adj[b][a] = false;
      adj[c][d] = adj[d][c] = false;
      adj[a][d] = adj[d][a] = true;
      adj[c][b] = adj[b][c] = true;
      edges[e1] = {std::min(a, d), std::max(a, d)};
      edges[e2] = {std::min(c, b), std::max(c, b)};
    }
  }
  auto g = LabeledGraph::from_edges(n, edges, Mat(), 0);
  assert(DegreeSequence::of(g) == s);
  return g;
}

inline LabeledGraph graph_from_degree_sequence(const DegreeSequence& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return graph_from_degree_sequence(s, rng);
}

/// How a generated dataset was built: enough to replay every graph.
/// permutations[i] maps base graph labels[i] onto dataset graph i.
struct IsoProvenance {
  GenParams params;
  std::vector<Edge> seed_graph;
  std::vector<std::vector<Edge>> base_graphs;
  std::vector<Permutation> permutations;

  friend bool operator==(const IsoProvenance&, const IsoProvenance&) = default;
};

struct IsoDataset {
  Dataset dataset;
  IsoProvenance provenance;
};

inline constexpr std::size_t kMaxCollisionRetries = 100;

/// Graphs are ordered class by class; graph c·N_g + i is copy i of class c.
inline IsoDataset generate_iso_dataset(const GenParams& params) {
  params.validate();
  std::mt19937_64 seed_rng(derive_seed(params.seed, 0));
  const LabeledGraph seed_graph = sample_er_connected(params.nodes, params.edge_prob, seed_rng);
  const DegreeSequence degrees = DegreeSequence::of(seed_graph);

  IsoDataset out;
  out.provenance.params = params;
  out.provenance.seed_graph = seed_graph.edges();

  std::vector<LabeledGraph> bases;
  for (std::size_t c = 0; c < params.classes; ++c) {
    std::mt19937_64 rng(derive_seed(params.seed, 1 + c));
    LabeledGraph base;
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt > kMaxCollisionRetries) {
        throw GenerationError("generate_iso_dataset: class " + std::to_string(c) +
                              " keeps colliding with an earlier class");
      }
      base = graph_from_degree_sequence(degrees, rng);
      base.label = c;
      const bool collides = std::any_of(bases.begin(), bases.end(),
                                        [&](const LabeledGraph& b) { return b.adjacency == base.adjacency; });
      if (!collides) break;
    }
    out.provenance.base_graphs.push_back(base.edges());
    for (std::size_t i = 0; i < params.per_class; ++i) {
      Permutation perm = random_permutation(params.nodes, rng);
      out.dataset.graphs.push_back(permute_graph(base, perm));
      out.provenance.permutations.push_back(std::move(perm));
    }
    bases.push_back(std::move(base));
  }

  out.dataset.name = "iso";
  out.dataset.max_nodes = params.nodes;
  out.dataset.feature_width = 1;
  out.dataset.class_count = params.classes;
  out.dataset.label_values.resize(params.classes);
  std::iota(out.dataset.label_values.begin(), out.dataset.label_values.end(), std::int64_t{0});
  return out;
}

/// Base graph of class `c` rebuilt from provenance.
inline LabeledGraph base_graph(const IsoProvenance& prov, std::size_t c) {
  return LabeledGraph::from_edges(prov.params.nodes, prov.base_graphs.at(c), Mat(), c);
}

// ---------------------------------------------------------------------------
// Provenance file
// ---------------------------------------------------------------------------
//
// {"format":"pinet-iso-provenance","version":1,
//  "params":{"N","C","N_g","edge_prob","seed"},
//  "seed_graph":[[i,j],..], "base_graphs":[[[i,j],..],..],
//  "permutations":[[π(0),π(1),..],..]}

inline constexpr std::string_view kProvenanceFormat = "pinet-iso-provenance";

inline void save_provenance(const IsoProvenance& prov, const std::filesystem::path& path) {
  nlohmann::json perms = nlohmann::json::array();
  for (const auto& p : prov.permutations) perms.push_back(p.mapping);
  const nlohmann::json j = {{"format", kProvenanceFormat},
                            {"version", 1},
                            {"params",
                             {{"N", prov.params.nodes},
                              {"C", prov.params.classes},
                              {"N_g", prov.params.per_class},
                              {"edge_prob", prov.params.edge_prob},
                              {"seed", prov.params.seed}}},
                            {"seed_graph", prov.seed_graph},
                            {"base_graphs", prov.base_graphs},
                            {"permutations", std::move(perms)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline IsoProvenance load_provenance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    nlohmann::json j;
    in >> j;
    if (j.at("format").get<std::string>() != kProvenanceFormat) throw FormatError("not a provenance file");
    IsoProvenance prov;
    const auto& p = j.at("params");
    prov.params = {p.at("N").get<std::size_t>(), p.at("C").get<std::size_t>(), p.at("N_g").get<std::size_t>(),
                   p.at("edge_prob").get<double>(), p.at("seed").get<std::uint64_t>()};
    prov.seed_graph = j.at("seed_graph").get<std::vector<Edge>>();
    prov.base_graphs = j.at("base_graphs").get<std::vector<std::vector<Edge>>>();
    for (const auto& m : j.at("permutations")) {
      Permutation perm{m.get<std::vector<std::size_t>>()};
      if (perm.size() != prov.params.nodes || !perm.is_valid()) throw FormatError("provenance: invalid permutation");
      prov.permutations.push_back(std::move(perm));
    }
    return prov;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

/// Conventional provenance location next to a dataset file.
inline std::filesystem::path provenance_path_for(const std::filesystem::path& dataset_path) {
  return dataset_path.string() + ".provenance.json";
}

}  // namespace pinet
