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

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pinet/error.hpp"
#include "pinet/graph.hpp"

namespace pinet {

/// Graphs sharing pad size N and feature width d, with labels in [0, C).
/// label_values[c] is the raw label that class index c stands for.
struct Dataset {
  std::string name;
  std::vector<LabeledGraph> graphs;
  std::size_t max_nodes = 0;  // N
  std::size_t feature_width = 0;  // d
  std::size_t class_count = 0;  // C
  std::vector<std::int64_t> label_values;

  std::size_t size() const { return graphs.size(); }
  bool empty() const { return graphs.empty(); }

  std::vector<std::size_t> labels() const {
    std::vector<std::size_t> out;
    out.reserve(graphs.size());
    for (const auto& g : graphs) out.push_back(g.label);
    return out;
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out = *this;
    out.graphs.clear();
    for (std::size_t i : indices) out.graphs.push_back(graphs.at(i));
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Checks the shared-shape invariants; throws ShapeError or DomainError.
inline void validate(const Dataset& ds) {
  std::size_t largest = 0;
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    const LabeledGraph& g = ds.graphs[i];
    if (g.padded_size() != ds.max_nodes || g.feature_width() != ds.feature_width) {
      throw ShapeError("dataset: graph " + std::to_string(i) + " does not match N=" + std::to_string(ds.max_nodes) +
                       ", d=" + std::to_string(ds.feature_width));
    }
    if (g.label >= ds.class_count) throw DomainError("dataset: graph " + std::to_string(i) + " label out of range");
    validate(g);
    largest = std::max(largest, g.n_real);
  }
  if (!ds.graphs.empty() && largest != ds.max_nodes) {
    throw DomainError("dataset: N=" + std::to_string(ds.max_nodes) + " but the largest graph has " +
                      std::to_string(largest) + " nodes");
  }
}

// ---------------------------------------------------------------------------
// TU benchmark format
// ---------------------------------------------------------------------------

namespace detail {

struct TextLines {
  std::filesystem::path path;
  std::vector<std::string> lines;  // blank trailing lines removed
};

inline std::optional<TextLines> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  TextLines t{path, {}};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.lines.push_back(line);
  }
  while (!t.lines.empty() && t.lines.back().find_first_not_of(" \t") == std::string::npos) t.lines.pop_back();
  return t;
}

inline TextLines require_lines(const std::filesystem::path& path) {
  auto t = read_lines(path);
  if (!t) throw IoError("missing required file '" + path.string() + "'");
  return *t;
}

/// Comma/whitespace separated integers of one line.
inline std::vector<std::int64_t> parse_ints(std::string_view line, const TextLines& src, std::size_t line_no) {
  std::vector<std::int64_t> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',')) ++i;
    if (i >= line.size()) break;
    std::int64_t v = 0;
    const char* begin = line.data() + i;
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, line.data() + line.size(), v);
    if (ec != std::errc{}) {
      throw FormatError("'" + src.path.filename().string() + "': expected an integer", line_no);
    }
    out.push_back(v);
    i = static_cast<std::size_t>(ptr - line.data());
  }
  return out;
}

inline std::int64_t parse_single(const TextLines& src, std::size_t idx) {
  const auto v = parse_ints(src.lines[idx], src, idx + 1);
  if (v.size() != 1) throw FormatError("'" + src.path.filename().string() + "': expected one value", idx + 1);
  return v[0];
}

}  // namespace detail

/// Loads `<dir>/<name>_{A,graph_indicator,graph_labels}.txt` and the optional
/// `<name>_node_labels.txt`. Edges are symmetrised and self-loops dropped.
/// Node labels become one-hot features (d = number of distinct values);
/// without them every node gets a single feature 1. Graph labels map by
/// sorted distinct value onto 0..C-1. Every graph is padded to the largest
/// node count.
inline Dataset load_tu(const std::filesystem::path& dir, const std::string& name) {
  const auto file = [&](const char* suffix) { return dir / (name + suffix); };
  const auto edges_src = detail::require_lines(file("_A.txt"));
  const auto indicator_src = detail::require_lines(file("_graph_indicator.txt"));
  const auto labels_src = detail::require_lines(file("_graph_labels.txt"));
  const auto node_labels_src = detail::read_lines(file("_node_labels.txt"));

  const std::size_t graph_count = labels_src.lines.size();
  std::vector<std::int64_t> raw_labels(graph_count);
  for (std::size_t g = 0; g < graph_count; ++g) raw_labels[g] = detail::parse_single(labels_src, g);

  // Node k (0-based) belongs to graph owner[k] at local index local[k].
  const std::size_t node_count = indicator_src.lines.size();
  std::vector<std::size_t> owner(node_count), local(node_count);
  std::vector<std::size_t> sizes(graph_count, 0);
  for (std::size_t k = 0; k < node_count; ++k) {
    const std::int64_t gid = detail::parse_single(indicator_src, k);
    if (gid < 1 || static_cast<std::size_t>(gid) > graph_count) {
      throw FormatError("'" + indicator_src.path.filename().string() + "': node " + std::to_string(k + 1) +
                            " references absent graph id " + std::to_string(gid),
                        k + 1);
    }
    owner[k] = static_cast<std::size_t>(gid - 1);
    local[k] = sizes[owner[k]]++;
  }
  for (std::size_t g = 0; g < graph_count; ++g)
    if (sizes[g] == 0) throw FormatError("TU dataset '" + name + "': graph " + std::to_string(g + 1) + " has no nodes");

  std::vector<std::int64_t> node_labels;
  std::map<std::int64_t, std::size_t> node_label_index;
  if (node_labels_src) {
    if (node_labels_src->lines.size() != node_count) {
      throw FormatError("'" + node_labels_src->path.filename().string() + "': has " +
                        std::to_string(node_labels_src->lines.size()) + " lines for " + std::to_string(node_count) +
                        " nodes");
    }
    node_labels.resize(node_count);
    for (std::size_t k = 0; k < node_count; ++k) {
      // Extra comma-separated columns, if any, are ignored.
      const auto v = detail::parse_ints(node_labels_src->lines[k], *node_labels_src, k + 1);
      if (v.empty()) throw FormatError("'" + node_labels_src->path.filename().string() + "': empty line", k + 1);
      node_labels[k] = v[0];
      node_label_index.emplace(v[0], 0);
    }
    std::size_t next = 0;
    for (auto& [value, idx] : node_label_index) idx = next++;
  }

  std::vector<std::vector<Edge>> edges(graph_count);
  for (std::size_t e = 0; e < edges_src.lines.size(); ++e) {
    const auto v = detail::parse_ints(edges_src.lines[e], edges_src, e + 1);
    if (v.size() != 2) throw FormatError("'" + edges_src.path.filename().string() + "': expected 'i, j'", e + 1);
    for (std::int64_t id : v) {
      if (id < 1 || static_cast<std::size_t>(id) > node_count) {
        throw FormatError("'" + edges_src.path.filename().string() + "': node id " + std::to_string(id) +
                              " out of range",
                          e + 1);
      }
    }
    const std::size_t a = static_cast<std::size_t>(v[0] - 1), b = static_cast<std::size_t>(v[1] - 1);
    if (owner[a] != owner[b]) {
      throw FormatError("'" + edges_src.path.filename().string() + "': edge joins two graphs", e + 1);
    }
    edges[owner[a]].emplace_back(local[a], local[b]);
  }

  Dataset ds;
  ds.name = name;
  ds.max_nodes = *std::max_element(sizes.begin(), sizes.end());
  ds.feature_width = node_labels_src ? node_label_index.size() : 1;

  std::set<std::int64_t> distinct(raw_labels.begin(), raw_labels.end());
  ds.label_values.assign(distinct.begin(), distinct.end());
  ds.class_count = ds.label_values.size();

  std::vector<Mat> features(graph_count);
  for (std::size_t g = 0; g < graph_count; ++g) features[g] = Mat(sizes[g], ds.feature_width, node_labels_src ? 0.0 : 1.0);
  if (node_labels_src) {
    for (std::size_t k = 0; k < node_count; ++k) features[owner[k]](local[k], node_label_index.at(node_labels[k])) = 1.0;
  }

  ds.graphs.reserve(graph_count);
  for (std::size_t g = 0; g < graph_count; ++g) {
    const auto cls = static_cast<std::size_t>(
        std::lower_bound(ds.label_values.begin(), ds.label_values.end(), raw_labels[g]) - ds.label_values.begin());
    ds.graphs.push_back(LabeledGraph::from_edges(sizes[g], edges[g], std::move(features[g]), cls, ds.max_nodes));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Internal line-delimited format
// ---------------------------------------------------------------------------
//
// Line 1: {"format":"pinet-dataset","version":1,"name":..,"N":..,"d":..,
//          "C":..,"label_values":[..]}
// Then one line per graph:
//         {"n_real":..,"edges":[[i,j],..],"features":[[..],..],"label":..}
// Edges list real nodes with i < j; features hold the n_real real rows.

inline constexpr std::string_view kDatasetFormat = "pinet-dataset";
inline constexpr int kDatasetVersion = 1;

inline nlohmann::json graph_to_json(const LabeledGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [i, j] : g.edges()) edges.push_back({i, j});
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t i = 0; i < g.n_real; ++i) features.push_back(std::vector<double>(g.features.row(i).begin(), g.features.row(i).end()));
  return {{"n_real", g.n_real}, {"edges", std::move(edges)}, {"features", std::move(features)}, {"label", g.label}};
}

inline LabeledGraph graph_from_json(const nlohmann::json& j, std::size_t padded, std::size_t width) {
  const auto n = j.at("n_real").get<std::size_t>();
  const auto edge_pairs = j.at("edges").get<std::vector<std::array<std::size_t, 2>>>();
  std::vector<Edge> edges;
  edges.reserve(edge_pairs.size());
  for (const auto& e : edge_pairs) edges.emplace_back(e[0], e[1]);
  const auto rows = j.at("features").get<std::vector<std::vector<double>>>();
  if (rows.size() != n) throw FormatError("graph record: " + std::to_string(rows.size()) + " feature rows for n_real=" + std::to_string(n));
  Mat features(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != width) throw FormatError("graph record: feature row width does not match d");
    std::copy(rows[i].begin(), rows[i].end(), features.row(i).begin());
  }
  return LabeledGraph::from_edges(n, edges, std::move(features), j.at("label").get<std::size_t>(), padded);
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const nlohmann::json header = {{"format", kDatasetFormat}, {"version", kDatasetVersion}, {"name", ds.name},
                                 {"N", ds.max_nodes},        {"d", ds.feature_width},       {"C", ds.class_count},
                                 {"label_values", ds.label_values}};
  out << header.dump() << '\n';
  for (const auto& g : ds.graphs) out << graph_to_json(g).dump() << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.at("format").get<std::string>() != kDatasetFormat) throw FormatError("not a pinet dataset", line_no);
        if (j.at("version").get<int>() != kDatasetVersion) throw FormatError("unsupported dataset version", line_no);
        ds.name = j.at("name").get<std::string>();
        ds.max_nodes = j.at("N").get<std::size_t>();
        ds.feature_width = j.at("d").get<std::size_t>();
        ds.class_count = j.at("C").get<std::size_t>();
        ds.label_values = j.at("label_values").get<std::vector<std::int64_t>>();
        have_header = true;
        continue;
      }
      ds.graphs.push_back(graph_from_json(j, ds.max_nodes, ds.feature_width));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("'" + path.string() + "': " + e.what(), line_no);
    } catch (const FormatError& e) {
      if (e.line) throw;
      throw FormatError("'" + path.string() + "': " + e.what(), line_no);
    } catch (const std::exception& e) {
      throw FormatError("'" + path.string() + "': " + e.what(), line_no);
    }
  }
  if (!have_header) throw FormatError("'" + path.string() + "': missing header record", 1);
  validate(ds);
  return ds;
}

}  // namespace pinet
