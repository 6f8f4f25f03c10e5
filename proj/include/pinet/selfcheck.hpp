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

// Randomised property suites run by `pinet selfcheck`: permutation
// invariance of the model, equivariance of the propagation matrix, the
// permuted inner-product identity, finite-difference gradients and padding
// invariance.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pinet/graph.hpp"
#include "pinet/model.hpp"
#include "pinet/rng.hpp"
#include "pinet/tensor.hpp"

namespace pinet::selfcheck {

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double tolerance = 0.0;
  double max_error = 0.0;
  std::string first_failure;  // empty when every case passed

  bool passed() const { return failures == 0; }
};

struct Options {
  std::uint64_t seed = 0;
  bool mask_padding = true;  // false only to demonstrate the padding check
};

namespace detail {

inline Mat random_mat(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat m(r, c);
  for (double& v : m.data()) v = u(rng);
  return m;
}

inline LabeledGraph random_graph(std::size_t n_real, std::size_t padded, std::size_t d, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.05, 0.6)(rng));
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n_real; ++i)
    for (std::size_t j = i + 1; j < n_real; ++j)
      if (coin(rng)) edges.emplace_back(i, j);
  return LabeledGraph::from_edges(n_real, edges, random_mat(n_real, d, rng, 0.0, 1.0), 0, padded);
}

inline PiNetParams random_params(PiNetConfig config, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  config.seed = rng();
  PiNetParams params = init_params(config);
  std::uniform_real_distribution<double> u(lo, hi);
  for (MpLayer l : kMpLayers) params.set_pq(l, {u(rng), u(rng)});
  return params;
}

// Runs `cases` trials of `check`, which returns the observed error and fills
// a description of the case.
inline SuiteResult run_suite(std::string name, std::size_t cases, double tol, std::uint64_t seed,
                             const std::function<double(std::mt19937_64&, std::string&)>& check) {
  SuiteResult r{std::move(name), cases, 0, tol, 0.0, {}};
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < cases; ++c) {
    std::string what;
    const double err = check(rng, what);
    r.max_error = std::max(r.max_error, err);
    if (!(err <= tol)) {
      ++r.failures;
      if (r.first_failure.empty()) {
        std::ostringstream os;
        os << "case " << c << " (" << what << "): error " << err << " > " << tol;
        r.first_failure = os.str();
      }
    }
  }
  return r;
}

}  // namespace detail

inline std::vector<SuiteResult> run_all(const Options& opts) {
  std::vector<SuiteResult> out;

  PiNetConfig config;
  config.input_width = 3;
  config.class_count = 3;
  config.width0 = 8;
  config.width1 = 6;
  config.mask_padding = opts.mask_padding;

  out.push_back(detail::run_suite(
      "permutation-invariance", 100, 1e-9, derive_seed(opts.seed, 1), [&](std::mt19937_64& rng, std::string& what) {
        PiNetConfig c = config;
        c.attention_axis = rng() % 2 ? AttentionAxis::Nodes : AttentionAxis::Features;
        const std::size_t n = 2 + rng() % 39;
        const LabeledGraph g = detail::random_graph(n, 40, 3, rng);
        const PiNetParams params = detail::random_params(c, rng);
        const Permutation perm = random_permutation(40, rng);
        what = "n_real=" + std::to_string(n);
        return max_abs_diff(forward(c, params, g), forward(c, params, permute_graph(g, perm),
                                                           permute_mask(node_mask(g), perm)));
      }));

  out.push_back(detail::run_suite(
      "propagation-equivariance", 100, 1e-10, derive_seed(opts.seed, 2), [&](std::mt19937_64& rng, std::string& what) {
        const std::size_t n = 2 + rng() % 30;
        const LabeledGraph g = detail::random_graph(n, n, 1, rng);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double p = u(rng), q = u(rng);
        const Permutation perm = random_permutation(n, rng);
        const Mat pm = perm.matrix();
        what = "n=" + std::to_string(n) + ", p=" + std::to_string(p) + ", q=" + std::to_string(q);
        return max_abs_diff(propagation_matrix(permute_graph(g, perm).adjacency, p, q),
                            matmul(matmul(pm, propagation_matrix(g.adjacency, p, q)), transpose(pm)));
      }));

  out.push_back(detail::run_suite(
      "permuted-inner-product", 100, 1e-12, derive_seed(opts.seed, 3), [&](std::mt19937_64& rng, std::string& what) {
        const std::size_t n = 1 + rng() % 30, m = 1 + rng() % 8, k = 1 + rng() % 8;
        const Mat a = detail::random_mat(n, m, rng, -1, 1), b = detail::random_mat(n, k, rng, -1, 1);
        const Mat p = random_permutation(n, rng).matrix();
        what = "n=" + std::to_string(n);
        return max_abs_diff(matmul_tn(matmul(p, a), matmul(p, b)), matmul_tn(a, b));
      }));

  out.push_back(detail::run_suite(
      "gradient-check", 10, 1e-4, derive_seed(opts.seed, 4), [&](std::mt19937_64& rng, std::string& what) {
        PiNetConfig c = config;
        c.input_width = 2;
        c.width0 = 5;
        c.width1 = 4;
        const std::size_t n = 2 + rng() % 7;
        std::vector<LabeledGraph> graphs = {detail::random_graph(n, 8, 2, rng), detail::random_graph(n, 8, 2, rng)};
        graphs[1].label = 2;
        const Batch batch = make_batch(graphs, c.class_count);
        // Keep p and q away from the clamp boundary so ±h stays in range.
        const PiNetParams params = detail::random_params(c, rng, 0.05, 0.95);
        auto f = [&](Tape&, std::span<const Var> vars) {
          BoundParams b;
          std::copy(vars.begin(), vars.end(), b.vars.begin());
          return loss_batch(b, c, batch);
        };
        const GradCheckReport report = grad_check(f, params.tensors, 1e-5, 1e-4);
        what = "n_real=" + std::to_string(n);
        if (!report.passed()) {
          const auto bad = report.failures().front();
          what += ", worst slot " + std::string(kSlotNames[bad.param]);
        }
        return report.max_rel_error;
      }));

  out.push_back(detail::run_suite(
      "padding-invariance", 50, 1e-9, derive_seed(opts.seed, 5), [&](std::mt19937_64& rng, std::string& what) {
        const std::size_t n = 2 + rng() % 20;
        const LabeledGraph g = detail::random_graph(n, n, 3, rng);
        const PiNetParams params = detail::random_params(config, rng);
        what = "n_real=" + std::to_string(n) + ", padded to N and N+10";
        return max_abs_diff(forward(config, params, pad_graph(g, 22)), forward(config, params, pad_graph(g, 32)));
      }));

  return out;
}

}  // namespace pinet::selfcheck
