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

#include "pinet/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "pinet/graph.hpp"
#include "test_util.hpp"

namespace pinet {
namespace {

using testing::random_mat;

TEST(Mat, ConstructionAndShape) {
  Mat m(2, 3, 1.5);
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m.size(), 6u);
  EXPECT_DOUBLE_EQ(m(1, 2), 1.5);
  EXPECT_THROW(Mat(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  EXPECT_THROW((Mat{{1, 2}, {3}}), ShapeError);
}

TEST(MatMul, IdentityLeavesMatrixUnchanged) {
  std::mt19937_64 rng(1);
  const Mat a = random_mat(3, 3, rng);
  EXPECT_EQ(matmul(Mat::identity(3), a), a);
}

TEST(MatMul, ZeroMatrixGivesZero) {
  std::mt19937_64 rng(2);
  EXPECT_EQ(matmul(Mat(2, 3), random_mat(3, 4, rng)), Mat(2, 4));
}

TEST(MatMul, HandComputedProduct) {
  // 1·5+2·7 = 19, 1·6+2·8 = 22, 3·5+4·7 = 43, 3·6+4·8 = 50.
  EXPECT_EQ(matmul(Mat{{1, 2}, {3, 4}}, Mat{{5, 6}, {7, 8}}), (Mat{{19, 22}, {43, 50}}));
}

TEST(MatMul, ShapeErrorNamesBothShapes) {
  try {
    matmul(Mat(2, 3), Mat(2, 3));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2x3"), std::string::npos) << what;
  }
}

TEST(MatMul, TransposedVariantsAgreeWithExplicitTranspose) {
  std::mt19937_64 rng(3);
  const Mat a = random_mat(4, 3, rng), b = random_mat(4, 5, rng), c = random_mat(6, 3, rng);
  EXPECT_LE(max_abs_diff(matmul_tn(a, b), matmul(transpose(a), b)), 1e-14);
  EXPECT_LE(max_abs_diff(matmul_nt(a, c), matmul(a, transpose(c))), 1e-14);
}

TEST(MatMul, AssociativityOnRandomTriples) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat a = random_mat(5, 4, rng), b = random_mat(4, 6, rng), c = random_mat(6, 3, rng);
    EXPECT_LE(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))), 1e-9);
  }
}

TEST(Transpose, InvolutionIdentityAndShape) {
  std::mt19937_64 rng(5);
  const Mat a = random_mat(3, 5, rng);
  EXPECT_EQ(transpose(transpose(a)), a);
  EXPECT_EQ(transpose(Mat::identity(4)), Mat::identity(4));
  EXPECT_EQ(transpose(Mat{{1, 2, 3}}), (Mat{{1}, {2}, {3}}));
}

TEST(Relu, DefinitionIdempotenceAndZeroCase) {
  EXPECT_EQ(relu(Mat{{-1, 2}, {0, -3}}), (Mat{{0, 2}, {0, 0}}));
  std::mt19937_64 rng(6);
  const Mat a = random_mat(4, 4, rng);
  EXPECT_EQ(relu(relu(a)), relu(a));
  EXPECT_EQ(relu(random_mat(3, 3, rng, -2.0, -0.1)), Mat(3, 3));
}

TEST(Softmax, UniformRow) {
  const Mat s = softmax_masked(Mat(1, 3), SoftmaxAxis::Rows);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(s(0, j), 1.0 / 3.0, 1e-15);
}

TEST(Softmax, MaskedPositionIsExactlyZero) {
  const Mat s = softmax_masked(Mat{{5, 5, 5, 100}}, SoftmaxAxis::Rows, {true, true, true, false});
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(s(0, j), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(s(0, 3), 0.0);
}

TEST(Softmax, ShiftInvariance) {
  std::mt19937_64 rng(7);
  const Mat x = random_mat(3, 6, rng, -3, 3);
  Mat shifted = x;
  for (double& v : shifted.data()) v += 123.0;
  EXPECT_LE(max_abs_diff(softmax_masked(x, SoftmaxAxis::Rows), softmax_masked(shifted, SoftmaxAxis::Rows)), 1e-14);
}

TEST(Softmax, ColumnAxisNormalisesColumns) {
  std::mt19937_64 rng(8);
  const Mat s = softmax_masked(random_mat(5, 3, rng), SoftmaxAxis::Cols, {true, false, true, true, false});
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(s(1, j), 0.0);
    EXPECT_EQ(s(4, j), 0.0);
    EXPECT_NEAR(s(0, j) + s(2, j) + s(3, j), 1.0, 1e-12);
  }
}

TEST(Softmax, PropertyOnRandomMasks) {
  std::mt19937_64 rng(9);
  std::bernoulli_distribution coin(0.6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<bool> mask(n);
    for (std::size_t k = 0; k < n; ++k) mask[k] = coin(rng);
    mask[rng() % n] = true;
    const Mat s = softmax_masked(random_mat(4, n, rng, -50, 50), SoftmaxAxis::Rows, mask);
    for (std::size_t i = 0; i < 4; ++i) {
      double total = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (mask[k]) {
          EXPECT_GE(s(i, k), 0.0);
          total += s(i, k);
        } else {
          EXPECT_EQ(s(i, k), 0.0);
        }
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Softmax, FullyMaskedSliceIsDegenerate) {
  EXPECT_THROW(softmax_masked(Mat(2, 2), SoftmaxAxis::Rows, {false, false}), DegenerateMaskError);
  EXPECT_THROW(softmax_masked(Mat(2, 2), SoftmaxAxis::Rows, {true}), ShapeError);
}

TEST(Reshape, RowMajorFlattening) {
  EXPECT_EQ(reshape_rowmajor(Mat{{1, 2}, {3, 4}}), (Mat{{1, 2, 3, 4}}));
  EXPECT_EQ(reshape_rowmajor(Mat{{7, 8, 9}}), (Mat{{7, 8, 9}}));
  EXPECT_EQ(reshape_rowmajor(Mat(3, 2)), Mat(1, 6));
}

TEST(CrossEntropy, PerfectPredictionIsZero) {
  const Mat y{{0, 1, 0}, {1, 0, 0}};
  EXPECT_LE(cross_entropy(y, y), 1e-10);
}

TEST(CrossEntropy, UniformTwoClass) {
  EXPECT_NEAR(cross_entropy(Mat{{0.5, 0.5}}, Mat{{0, 1}}), std::log(2.0), 1e-15);
}

TEST(CrossEntropy, UniformFiveClassBatchOfTwo) {
  const Mat z(2, 5, 0.2);
  const Mat y{{1, 0, 0, 0, 0}, {0, 0, 0, 1, 0}};
  EXPECT_NEAR(cross_entropy(z, y), 2.0 * std::log(5.0), 1e-12);
}

TEST(CrossEntropy, ContractViolations) {
  EXPECT_THROW(cross_entropy(Mat(1, 2, 0.5), Mat(1, 3)), ShapeError);
  EXPECT_THROW(cross_entropy(Mat{{0.7, 0.7}}, Mat{{1, 0}}), ContractError);
  EXPECT_THROW(cross_entropy(Mat{{0.5, 0.5}}, Mat{{1, 1}}), ContractError);
}

TEST(CrossEntropy, ZeroProbabilityIsFloored) {
  EXPECT_NEAR(cross_entropy(Mat{{1.0, 0.0}}, Mat{{0, 1}}), -std::log(kProbabilityFloor), 1e-9);
}

TEST(Backward, SumGivesOnes) {
  Tape t;
  Var w = t.parameter(Mat{{1, -2}, {3, 4}});
  const Gradients g = t.backward(sum(w));
  EXPECT_EQ(g.of(w), Mat(2, 2, 1.0));
}

TEST(Backward, DeadReluGivesZero) {
  Tape t;
  Var w = t.parameter(Mat{{1, 2}, {3, 4}});
  const Gradients g = t.backward(sum(relu(scale(w, -1.0))));
  EXPECT_EQ(g.of(w), Mat(2, 2));
}

TEST(Backward, NonScalarRootIsContractError) {
  Tape t;
  Var w = t.parameter(Mat(2, 2, 1.0));
  EXPECT_THROW(t.backward(w), ContractError);
}

TEST(Backward, ConstantsReceiveNoGradient) {
  Tape t;
  Var w = t.parameter(Mat{{1, 2}});
  Var c = t.constant(Mat{{3}, {4}});
  const Gradients g = t.backward(matmul(w, c));
  EXPECT_TRUE(g.contains(w));
  EXPECT_FALSE(g.contains(c));
  EXPECT_EQ(g.of(w), (Mat{{3, 4}}));
  EXPECT_EQ(g.of(c), Mat(2, 1));
}

TEST(Backward, ParentsPrecedeChildren) {
  Tape t;
  Var a = t.parameter(Mat(2, 2, 1.0));
  Var b = relu(matmul(a, transpose(a)));
  Var l = sum(b);
  for (std::size_t id = 0; id < t.size(); ++id) {
    for (std::size_t p : t.parents(Var{&t, id})) EXPECT_LT(p, id);
  }
  EXPECT_EQ(l.id, t.size() - 1);
}

TEST(Backward, DeterministicForFixedTape) {
  std::mt19937_64 rng(10);
  const Mat w0 = random_mat(3, 3, rng);
  auto run = [&] {
    Tape t;
    Var w = t.parameter(w0);
    return t.backward(sum(relu(matmul(w, w)))).of(w);
  };
  EXPECT_EQ(run(), run());
}

TEST(GradCheck, QuadraticDerivative) {
  const Mat x{{3.0}};
  const auto report = grad_check([](Tape&, std::span<const Var> p) { return sum(matmul(p[0], p[0])); },
                                 std::span<const Mat>(&x, 1), 1e-5, 1e-8);
  ASSERT_EQ(report.entries.size(), 1u);
  EXPECT_NEAR(report.entries[0].analytic, 6.0, 1e-12);
  EXPECT_NEAR(report.entries[0].numeric, 6.0, 1e-8);
  EXPECT_TRUE(report.passed());
}

TEST(GradCheck, RejectsNonPositiveStep) {
  const Mat x{{1.0}};
  EXPECT_THROW(grad_check([](Tape&, std::span<const Var> p) { return sum(p[0]); }, std::span<const Mat>(&x, 1), 0.0, 1e-4),
               DomainError);
}

TEST(GradCheck, FlagsAWrongGradient) {
  // A custom op whose backward is deliberately off by a factor of two.
  const Mat x{{0.3, -0.7}};
  auto f = [](Tape& t, std::span<const Var> p) {
    Var y = t.record(OpKind::Custom, {p[0]}, scale(p[0].value(), 3.0), [](const Mat& g, std::span<Mat* const> pg) {
      if (pg[0]) *pg[0] += scale(g, 6.0);
    });
    return sum(y);
  };
  const auto report = grad_check(f, std::span<const Mat>(&x, 1), 1e-5, 1e-4);
  EXPECT_FALSE(report.passed());
  EXPECT_EQ(report.failures().size(), 2u);
}

TEST(GradCheck, RandomCompositionOfAllOps) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Mat> params = {random_mat(4, 3, rng), random_mat(3, 5, rng), random_mat(4, 5, rng),
                               random_mat(25, 3, rng, -0.3, 0.3)};
    std::vector<bool> mask = {true, false, true, true};
    Mat y(1, 3);
    y(0, rng() % 3) = 1.0;
    auto f = [&](Tape&, std::span<const Var> p) {
      Var h = relu(add(matmul(p[0], p[1]), scale(p[2], 0.5)));     // 4x5
      Var att = softmax_masked(transpose(h), SoftmaxAxis::Rows, mask);  // 5x4
      Var cols = transpose(mask_columns(transpose(softmax_masked(h, SoftmaxAxis::Cols, mask)), mask));
      Var pooled = matmul(att, add(h, scale(cols, 2.0)));  // 5x5
      Var flat = reshape_rowmajor(matmul(pooled, transpose(pooled)));  // 1x25
      Var logits = matmul(flat, p[3]);
      return cross_entropy(softmax_masked(logits, SoftmaxAxis::Rows), y);
    };
    const auto report = grad_check(f, params, 1e-5, 1e-4);
    EXPECT_TRUE(report.passed()) << "trial " << trial << " max rel error " << report.max_rel_error;
  }
}

TEST(GradCheck, StackRowsRoutesGradientsPerRow) {
  std::mt19937_64 rng(12);
  const std::vector<Mat> params = {random_mat(1, 3, rng), random_mat(1, 3, rng)};
  const Mat y{{0, 1, 0}, {0, 0, 1}};
  auto f = [&](Tape&, std::span<const Var> p) {
    std::vector<Var> rows = {softmax_masked(p[0], SoftmaxAxis::Rows), softmax_masked(p[1], SoftmaxAxis::Rows)};
    return cross_entropy(stack_rows(rows), y);
  };
  EXPECT_TRUE(grad_check(f, params, 1e-5, 1e-6).passed());
}

TEST(Lemma1, PermutedInnerProductIsUnchanged) {
  // (PA)ᵀ(PB) = AᵀPᵀPB = AᵀB, since P is orthogonal.
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 10;
    const Mat a = random_mat(n, 1 + rng() % 5, rng), b = random_mat(n, 1 + rng() % 5, rng);
    const Mat p = random_permutation(n, rng).matrix();
    EXPECT_LE(max_abs_diff(matmul_tn(matmul(p, a), matmul(p, b)), matmul_tn(a, b)), 1e-12);
  }
}

}  // namespace
}  // namespace pinet
