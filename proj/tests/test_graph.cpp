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

#include "pinet/graph.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "test_util.hpp"

namespace pinet {
namespace {

using testing::random_graph;
using testing::random_graph_min_degree1;
using testing::random_mat;

LabeledGraph triangle(std::size_t padded = 3) {
  const std::vector<Edge> e = {{0, 1}, {1, 2}, {0, 2}};
  return LabeledGraph::from_edges(3, e, Mat(), 0, padded);
}

LabeledGraph path3() {
  const std::vector<Edge> e = {{0, 1}, {1, 2}};
  return LabeledGraph::from_edges(3, e, Mat(), 0);
}

// Ã written out element by element with std::sqrt, independent of the
// library's scaling helper: Ã_ij = (A+qI)_ij / sqrt(b_i b_j), b = p + (1−p)deg,
// with a zero base contributing zero.
Mat propagation_oracle(const Mat& a, double p, double q) {
  const std::size_t n = a.rows();
  std::vector<double> base(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
    base[i] = p + (1.0 - p) * deg;
  }
  Mat out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double m = a(i, j) + (i == j ? q : 0.0);
      if (base[i] == 0.0 || base[j] == 0.0) continue;
      out(i, j) = m / std::sqrt(base[i] * base[j]);
    }
  }
  return out;
}

TEST(LabeledGraph, FromEdgesSymmetrisesAndDropsSelfLoops) {
  const std::vector<Edge> e = {{0, 1}, {1, 1}, {2, 1}};
  const LabeledGraph g = LabeledGraph::from_edges(3, e, Mat(), 1, 5);
  EXPECT_EQ(g.padded_size(), 5u);
  EXPECT_EQ(g.adjacency(1, 1), 0.0);
  EXPECT_EQ(g.adjacency(1, 2), 1.0);
  EXPECT_EQ(g.adjacency(2, 1), 1.0);
  EXPECT_EQ(g.features, (Mat{{1}, {1}, {1}, {0}, {0}}));
  EXPECT_NO_THROW(validate(g));
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1}, {1, 2}}));
}

TEST(LabeledGraph, ValidateRejectsBrokenInvariants) {
  LabeledGraph g = triangle(4);
  g.adjacency(0, 1) = 0.0;
  EXPECT_THROW(validate(g), DomainError);
  g = triangle(4);
  g.features(3, 0) = 1.0;
  EXPECT_THROW(validate(g), DomainError);
  g = triangle(4);
  g.adjacency(2, 2) = 1.0;
  EXPECT_THROW(validate(g), DomainError);
}

TEST(DegreeMatrix, TrianglePathAndPadding) {
  EXPECT_EQ(degree_matrix(triangle().adjacency), (Mat{{2, 0, 0}, {0, 2, 0}, {0, 0, 2}}));
  EXPECT_EQ(degree_matrix(path3().adjacency), (Mat{{1, 0, 0}, {0, 2, 0}, {0, 0, 1}}));
  const Mat d = degree_matrix(triangle(5).adjacency);
  EXPECT_EQ(d(3, 3), 0.0);
  EXPECT_EQ(d(4, 4), 0.0);
  EXPECT_EQ(d(0, 0), 2.0);
  EXPECT_THROW(degree_matrix(Mat(2, 3)), ShapeError);
}

TEST(DegreeMatrix, PermutationEquivariantExactly) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const LabeledGraph g = random_graph(2 + rng() % 15, 18, 1, rng);
    const Permutation perm = random_permutation(g.padded_size(), rng);
    const Mat p = perm.matrix();
    EXPECT_EQ(degree_matrix(permute_graph(g, perm).adjacency),
              matmul(matmul(p, degree_matrix(g.adjacency)), transpose(p)));
  }
}

TEST(Propagation, AdjacencyCorner) {
  const Mat a = path3().adjacency;
  EXPECT_EQ(propagation_matrix(a, 1.0, 0.0), a);
}

TEST(Propagation, SelfLoopCorner) {
  const Mat a = path3().adjacency;
  EXPECT_EQ(propagation_matrix(a, 1.0, 1.0), add(a, Mat::identity(3)));
}

TEST(Propagation, NormalisedTriangleIsHalfA) {
  const Mat a = triangle().adjacency;
  EXPECT_LE(max_abs_diff(propagation_matrix(a, 0.0, 0.0), scale(a, 0.5)), 1e-15);
}

TEST(Propagation, NormalisedCornersMatchClosedForm) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat a = random_graph_min_degree1(2 + rng() % 15, rng).adjacency;
    const std::size_t n = a.rows();
    Mat d_inv_sqrt(n, n);
    const Mat d = degree_matrix(a);
    for (std::size_t i = 0; i < n; ++i) d_inv_sqrt(i, i) = 1.0 / std::sqrt(d(i, i));
    const Mat sym = matmul(matmul(d_inv_sqrt, a), d_inv_sqrt);
    const Mat sym_loops = matmul(matmul(d_inv_sqrt, add(a, Mat::identity(n))), d_inv_sqrt);
    EXPECT_LE(max_abs_diff(propagation_matrix(a, 0.0, 0.0), sym), 1e-12);
    EXPECT_LE(max_abs_diff(propagation_matrix(a, 0.0, 1.0), sym_loops), 1e-12);
  }
}

TEST(Propagation, MatchesElementwiseOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const LabeledGraph g = random_graph(1 + rng() % 12, 14, 1, rng);
    const double p = trial % 10 == 0 ? 0.0 : u(rng), q = u(rng);
    const Mat got = propagation_matrix(g.adjacency, p, q), want = propagation_oracle(g.adjacency, p, q);
    for (std::size_t k = 0; k < got.size(); ++k) {
      EXPECT_NEAR(got.data()[k], want.data()[k], 1e-13 * std::max(1.0, std::abs(want.data()[k])));
    }
  }
}

TEST(Propagation, IsolatedNodeAtZeroPIsInert) {
  const std::vector<Edge> e = {{0, 1}};
  const LabeledGraph g = LabeledGraph::from_edges(3, e, Mat(), 0, 5);
  const Mat t = propagation_matrix(g.adjacency, 0.0, 1.0);
  EXPECT_TRUE(all_finite(t));
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(t(2, j), 0.0);
    EXPECT_EQ(t(4, j), 0.0);
  }
}

TEST(Propagation, PaddedNodesCarryNoCrossEdges) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const LabeledGraph g = random_graph(2 + rng() % 8, 12, 1, rng);
    const Mat t = propagation_matrix(g.adjacency, u(rng), u(rng));
    for (std::size_t i = g.n_real; i < 12; ++i)
      for (std::size_t j = 0; j < 12; ++j)
        if (j != i) {
          EXPECT_EQ(t(i, j), 0.0);
          EXPECT_EQ(t(j, i), 0.0);
        }
  }
}

TEST(Propagation, DomainAndShapeErrors) {
  const Mat a = triangle().adjacency;
  EXPECT_THROW(propagation_matrix(a, 1.5, 0.0), DomainError);
  EXPECT_THROW(propagation_matrix(a, 0.5, -0.1), DomainError);
  EXPECT_THROW(propagation_matrix(Mat(2, 3), 0.5, 0.5), ShapeError);
}

TEST(Propagation, Lemma2Equivariance) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const LabeledGraph g = random_graph(2 + rng() % 20, 22, 1, rng);
    const Permutation perm = random_permutation(22, rng);
    const Mat p = perm.matrix();
    const double pv = u(rng), qv = u(rng);
    const Mat lhs = propagation_matrix(permute_graph(g, perm).adjacency, pv, qv);
    const Mat rhs = matmul(matmul(p, propagation_matrix(g.adjacency, pv, qv)), transpose(p));
    EXPECT_LE(max_abs_diff(lhs, rhs), 1e-10);
  }
}

TEST(Propagation, GradientWithRespectToPQ) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const LabeledGraph g = random_graph(3 + rng() % 5, 9, 1, rng);
    const Mat w = random_mat(9, 9, rng);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    const std::vector<Mat> params = {Mat(1, 1, u(rng)), Mat(1, 1, u(rng))};
    auto f = [&](Tape& t, std::span<const Var> pq) {
      Var m = propagation_matrix(g.adjacency, pq[0], pq[1]);
      return sum(matmul(matmul(m, t.constant(w)), m));
    };
    const auto report = grad_check(f, params, 1e-5, 1e-6);
    EXPECT_TRUE(report.passed()) << report.max_rel_error;
  }
}

TEST(Propagation, VarValueMatchesPlainValue) {
  std::mt19937_64 rng(6);
  const LabeledGraph g = random_graph(6, 8, 1, rng);
  Tape t;
  Var m = propagation_matrix(g.adjacency, t.parameter(Mat(1, 1, 0.3)), t.parameter(Mat(1, 1, 0.8)));
  EXPECT_EQ(m.value(), propagation_matrix(g.adjacency, 0.3, 0.8));
}

TEST(Permutation, IdentityInverseAndValidity) {
  std::mt19937_64 rng(7);
  const LabeledGraph g = random_graph(6, 8, 2, rng);
  EXPECT_EQ(permute_graph(g, Permutation::identity(8)), g);
  const Permutation perm = random_permutation(8, rng);
  EXPECT_EQ(permute_graph(permute_graph(g, perm), perm.inverse()), g);
  EXPECT_THROW(permute_graph(g, Permutation{{0, 0, 1, 2, 3, 4, 5, 6}}), DomainError);
  EXPECT_THROW(permute_graph(g, Permutation::identity(7)), DomainError);
}

TEST(Permutation, PathSwapEnds) {
  const LabeledGraph g = permute_graph(path3(), Permutation{{2, 1, 0}});
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1}, {1, 2}}));
  EXPECT_EQ(degree_matrix(g.adjacency), degree_matrix(path3().adjacency));
}

TEST(Permutation, MatrixActsOnRowsAsMapping) {
  std::mt19937_64 rng(8);
  const LabeledGraph g = random_graph(5, 5, 3, rng);
  const Permutation perm = random_permutation(5, rng);
  const LabeledGraph pg = permute_graph(g, perm);
  const Mat p = perm.matrix();
  EXPECT_EQ(pg.adjacency, matmul(matmul(p, g.adjacency), transpose(p)));
  EXPECT_EQ(pg.features, matmul(p, g.features));
}

TEST(RandomPermutation, SingletonAndDeterminism) {
  EXPECT_EQ(random_permutation(1, 42).mapping, std::vector<std::size_t>{0});
  EXPECT_EQ(random_permutation(20, 42), random_permutation(20, 42));
  EXPECT_NE(random_permutation(20, 42), random_permutation(20, 43));
}

TEST(RandomPermutation, UniformOverS3) {
  std::mt19937_64 rng(9);
  std::map<std::vector<std::size_t>, int> counts;
  constexpr int kDraws = 10000;
  for (int i = 0; i < kDraws; ++i) ++counts[random_permutation(3, rng).mapping];
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [perm, c] : counts) EXPECT_NEAR(static_cast<double>(c) / kDraws, 1.0 / 6.0, 0.02);
}

TEST(PadGraph, IdentityExtensionAndError) {
  const LabeledGraph k3 = triangle();
  EXPECT_EQ(pad_graph(k3, 3), k3);
  const LabeledGraph p = pad_graph(k3, 5);
  EXPECT_EQ(p.padded_size(), 5u);
  EXPECT_EQ(p.n_real, 3u);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(p.adjacency(i, j), k3.adjacency(i, j));
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(p.adjacency(3, j), 0.0);
    EXPECT_EQ(p.adjacency(j, 4), 0.0);
  }
  const Mat d = degree_matrix(p.adjacency);
  EXPECT_EQ(d, (Mat{{2, 0, 0, 0, 0}, {0, 2, 0, 0, 0}, {0, 0, 2, 0, 0}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}}));
  EXPECT_THROW(pad_graph(k3, 2), DomainError);
  EXPECT_EQ(pad_graph(p, 3), k3);
}

TEST(MakeBatch, LabelsAndMasks) {
  LabeledGraph a = triangle(5);
  Batch b = make_batch(std::vector<LabeledGraph>{a}, 2);
  EXPECT_EQ(b.labels, (Mat{{1, 0}}));
  EXPECT_EQ(b.masks[0], (std::vector<bool>{true, true, true, false, false}));

  LabeledGraph c = a;
  c.label = 1;
  b = make_batch(std::vector<LabeledGraph>{c, a}, 2);
  EXPECT_EQ(b.labels, (Mat{{0, 1}, {1, 0}}));
}

TEST(MakeBatch, InconsistentShapesRejected) {
  EXPECT_THROW(make_batch(std::vector<LabeledGraph>{triangle(4), triangle(5)}, 2), ShapeError);
  LabeledGraph bad = triangle();
  bad.label = 2;
  EXPECT_THROW(make_batch(std::vector<LabeledGraph>{bad}, 2), DomainError);
  EXPECT_THROW(make_batch(std::vector<LabeledGraph>{}, 2), ShapeError);
}

}  // namespace
}  // namespace pinet
