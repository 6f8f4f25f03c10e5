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

// Dense row-major matrices of doubles and a define-by-run tape for
// reverse-mode differentiation. Every op exists twice: on plain Mat values,
// and on Var handles where the result is recorded on the operands' tape.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pinet/error.hpp"

namespace pinet {

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("Mat: data length " + std::to_string(data_.size()) + " does not match " +
                       std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }
  Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("Mat: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  Mat& operator+=(const Mat& o) {
    if (!same_shape(o)) throw ShapeError("Mat +=: shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline bool all_finite(const Mat& m) {
  return std::all_of(m.data().begin(), m.data().end(), [](double v) { return std::isfinite(v); });
}

namespace detail {

inline const Mat& require_finite(const Mat& m, const char* op) {
  if (!all_finite(m)) throw NumericError(std::string(op) + ": produced a non-finite entry");
  return m;
}

}  // namespace detail

inline double max_abs_diff(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff: " + shape_str(a) + " vs " + shape_str(b));
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a.data()[k] - b.data()[k]));
  return worst;
}

inline double sum(const Mat& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s;
}

// ---------------------------------------------------------------------------
// Plain value ops
// ---------------------------------------------------------------------------

/// a·b. Zero entries of `a` are skipped, which makes products with sparse
/// propagation matrices and post-ReLU activations cheap without changing the
/// result.
inline Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + shape_str(a) + " by " + shape_str(b));
  }
  Mat out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* br = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * br[j];
    }
  }
  detail::require_finite(out, "matmul");
  return out;
}

/// aᵀ·b without materialising the transpose.
inline Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: cannot multiply transpose of " + shape_str(a) + " by " + shape_str(b));
  }
  Mat out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* br = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += aki * br[j];
    }
  }
  detail::require_finite(out, "matmul_tn");
  return out;
}

/// a·bᵀ without materialising the transpose.
inline Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: cannot multiply " + shape_str(a) + " by transpose of " + shape_str(b));
  }
  Mat out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ar = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* br = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += ar[k] * br[k];
      out(i, j) = s;
    }
  }
  detail::require_finite(out, "matmul_nt");
  return out;
}

inline Mat transpose(const Mat& a) {
  Mat out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

inline Mat relu(const Mat& a) {
  Mat out = a;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

inline Mat add(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) throw ShapeError("add: " + shape_str(a) + " vs " + shape_str(b));
  Mat out = a;
  out += b;
  detail::require_finite(out, "add");
  return out;
}

inline Mat scale(const Mat& a, double s) {
  Mat out = a;
  for (double& v : out.data()) v *= s;
  detail::require_finite(out, "scale");
  return out;
}

/// Which slices softmax_masked normalises. `Rows`: every row becomes a
/// distribution over its columns (mask has one entry per column). `Cols`:
/// every column becomes a distribution over its rows.
enum class SoftmaxAxis { Rows, Cols };

namespace detail {

// Calls fn(offset, stride, length) once per normalised slice.
template <typename Fn>
void for_each_slice(std::size_t rows, std::size_t cols, SoftmaxAxis axis, Fn&& fn) {
  if (axis == SoftmaxAxis::Rows) {
    for (std::size_t i = 0; i < rows; ++i) fn(i * cols, std::size_t{1}, cols);
  } else {
    for (std::size_t j = 0; j < cols; ++j) fn(j, cols, rows);
  }
}

}  // namespace detail

/// Exp-normalisation over unmasked positions with max subtraction. Masked
/// positions come out as exactly 0. An empty mask means nothing is masked.
inline Mat softmax_masked(const Mat& a, SoftmaxAxis axis, const std::vector<bool>& mask = {}) {
  const std::size_t len = axis == SoftmaxAxis::Rows ? a.cols() : a.rows();
  if (!mask.empty() && mask.size() != len) {
    throw ShapeError("softmax_masked: mask length " + std::to_string(mask.size()) +
                     " does not match normalised axis of length " + std::to_string(len));
  }
  if (len == 0 || (!mask.empty() && std::none_of(mask.begin(), mask.end(), [](bool b) { return b; }))) {
    throw DegenerateMaskError("softmax_masked: every position of the slice is masked");
  }
  auto keep = [&](std::size_t k) { return mask.empty() || mask[k]; };
  Mat out(a.rows(), a.cols());
  const double* in = a.data().data();
  double* o = out.data().data();
  detail::for_each_slice(a.rows(), a.cols(), axis, [&](std::size_t off, std::size_t stride, std::size_t n) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k)
      if (keep(k)) hi = std::max(hi, in[off + k * stride]);
    double z = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!keep(k)) continue;
      const double e = std::exp(in[off + k * stride] - hi);
      o[off + k * stride] = e;
      z += e;
    }
    for (std::size_t k = 0; k < n; ++k) o[off + k * stride] = keep(k) ? o[off + k * stride] / z : 0.0;
  });
  return out;
}

inline Mat reshape_rowmajor(const Mat& a) {
  return Mat(1, a.size(), std::vector<double>(a.data().begin(), a.data().end()));
}

inline constexpr double kProbabilityFloor = 1e-12;

namespace detail {

inline void check_cross_entropy_args(const Mat& z, const Mat& y) {
  if (!z.same_shape(y)) throw ShapeError("cross_entropy: predictions " + shape_str(z) + " vs targets " + shape_str(y));
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double zs = 0.0;
    std::size_t ones = 0;
    for (std::size_t f = 0; f < z.cols(); ++f) {
      zs += z(i, f);
      if (y(i, f) == 1.0) {
        ++ones;
      } else if (y(i, f) != 0.0) {
        ones = 2;
      }
    }
    if (std::abs(zs - 1.0) > 1e-6) throw ContractError("cross_entropy: prediction row is not a distribution");
    if (ones != 1) throw ContractError("cross_entropy: target row is not one-hot");
  }
}

}  // namespace detail

/// −Σ Y·ln(max(Z, 1e-12)) summed over all rows.
inline double cross_entropy(const Mat& z, const Mat& y) {
  detail::check_cross_entropy_args(z, y);
  double loss = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (y.data()[k] != 0.0) loss -= y.data()[k] * std::log(std::max(z.data()[k], kProbabilityFloor));
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

enum class OpKind {
  Parameter,
  Constant,
  MatMul,
  Transpose,
  Relu,
  Softmax,
  Reshape,
  CrossEntropy,
  Sum,
  Add,
  Scale,
  StackRows,
  MaskColumns,
  Custom,
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Mat& value() const;
};

/// Gradient of a scalar with respect to the parameters of a tape, keyed by
/// parameter node. Absent entries are zero.
class Gradients {
 public:
  bool contains(Var v) const { return by_id_.count(v.id) != 0; }
  std::size_t size() const { return by_id_.size(); }

  /// Gradient for `v`, or zeros of its shape when `v` did not influence the loss.
  Mat of(Var v) const {
    auto it = by_id_.find(v.id);
    if (it != by_id_.end()) return it->second;
    return Mat(v.value().rows(), v.value().cols());
  }

  const std::map<std::size_t, Mat>& entries() const { return by_id_; }

 private:
  friend class Tape;
  std::map<std::size_t, Mat> by_id_;
};

class Tape {
 public:
  /// Accumulates the node's output gradient into its parents' gradients.
  /// A null entry means the parent needs no gradient and may be skipped.
  using BackwardFn = std::function<void(const Mat& out_grad, std::span<Mat* const> parent_grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var parameter(Mat value) { return push(OpKind::Parameter, {}, std::move(value), nullptr, true); }
  Var constant(Mat value) { return push(OpKind::Constant, {}, std::move(value), nullptr, false); }

  /// Appends a derived node. It needs a gradient iff some parent does.
  Var record(OpKind kind, std::vector<Var> parents, Mat value, BackwardFn backward) {
    std::vector<std::size_t> ids;
    ids.reserve(parents.size());
    bool needs_grad = false;
    for (const Var& p : parents) {
      if (p.tape != this) throw ContractError("Tape::record: operand belongs to a different tape");
      ids.push_back(p.id);
      needs_grad = needs_grad || nodes_[p.id].requires_grad;
    }
    return push(kind, std::move(ids), std::move(value), std::move(backward), needs_grad);
  }

  const Mat& value(Var v) const { return nodes_.at(v.id).value; }
  OpKind kind(Var v) const { return nodes_.at(v.id).kind; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::span<const std::size_t> parents(Var v) const { return nodes_.at(v.id).parents; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a 1x1 node. Returns d(loss)/d(parameter) for every
  /// parameter node the loss depends on.
  Gradients backward(Var loss) const {
    if (loss.tape != this) throw ContractError("Tape::backward: loss belongs to a different tape");
    const Node& root = nodes_.at(loss.id);
    if (root.value.rows() != 1 || root.value.cols() != 1) {
      throw ContractError("Tape::backward: root must be a 1x1 scalar, got " + shape_str(root.value));
    }
    std::vector<Mat> grads(loss.id + 1);
    grads[loss.id] = Mat(1, 1, 1.0);
    Gradients result;
    std::vector<Mat*> parent_slots;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      const Node& node = nodes_[i];
      if (grads[i].empty() || !node.requires_grad) continue;
      if (node.kind == OpKind::Parameter) {
        result.by_id_.emplace(i, std::move(grads[i]));
        continue;
      }
      parent_slots.assign(node.parents.size(), nullptr);
      for (std::size_t k = 0; k < node.parents.size(); ++k) {
        const std::size_t pid = node.parents[k];
        if (!nodes_[pid].requires_grad) continue;
        if (grads[pid].empty()) grads[pid] = Mat(nodes_[pid].value.rows(), nodes_[pid].value.cols());
        parent_slots[k] = &grads[pid];
      }
      node.backward(grads[i], parent_slots);
      grads[i] = Mat();
    }
    return result;
  }

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> parents;
    Mat value;
    BackwardFn backward;
    bool requires_grad;
  };

  Var push(OpKind kind, std::vector<std::size_t> parents, Mat value, BackwardFn backward, bool requires_grad) {
    nodes_.push_back(Node{kind, std::move(parents), std::move(value), std::move(backward), requires_grad});
    return Var{this, nodes_.size() - 1};
  }

  // deque: node values keep their addresses as the tape grows, so backward
  // closures may hold pointers to operand values.
  std::deque<Node> nodes_;
};

inline const Mat& Var::value() const { return tape->value(*this); }

namespace detail {

inline Tape& same_tape(Var a, Var b, const char* op) {
  if (a.tape == nullptr || a.tape != b.tape) throw ContractError(std::string(op) + ": operands on different tapes");
  return *a.tape;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Recorded ops
// ---------------------------------------------------------------------------

inline Var matmul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b, "matmul");
  const Mat* av = &a.value();
  const Mat* bv = &b.value();
  return t.record(OpKind::MatMul, {a, b}, matmul(*av, *bv), [av, bv](const Mat& g, std::span<Mat* const> pg) {
    if (pg[0]) *pg[0] += matmul_nt(g, *bv);
    if (pg[1]) *pg[1] += matmul_tn(*av, g);
  });
}

inline Var transpose(Var a) {
  return a.tape->record(OpKind::Transpose, {a}, transpose(a.value()), [](const Mat& g, std::span<Mat* const> pg) {
    if (pg[0]) *pg[0] += transpose(g);
  });
}

inline Var relu(Var a) {
  const Mat* av = &a.value();
  return a.tape->record(OpKind::Relu, {a}, relu(*av), [av](const Mat& g, std::span<Mat* const> pg) {
    if (!pg[0]) return;
    auto in = av->data();
    auto out = pg[0]->data();
    for (std::size_t k = 0; k < out.size(); ++k)
      if (in[k] > 0.0) out[k] += g.data()[k];
  });
}

inline Var softmax_masked(Var a, SoftmaxAxis axis, const std::vector<bool>& mask = {}) {
  Mat y = softmax_masked(a.value(), axis, mask);
  std::vector<bool> keep(mask.begin(), mask.end());
  // Jacobian-vector product per slice: dx_k = y_k (g_k - sum_j g_j y_j).
  // Masked outputs are constant 0, so their inputs get no gradient.
  Tape::BackwardFn fn = [y, axis, keep = std::move(keep)](const Mat& g, std::span<Mat* const> pg) {
    if (!pg[0]) return;
    const double* yd = y.data().data();
    const double* gd = g.data().data();
    double* dx = pg[0]->data().data();
    detail::for_each_slice(y.rows(), y.cols(), axis, [&](std::size_t off, std::size_t stride, std::size_t n) {
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += gd[off + k * stride] * yd[off + k * stride];
      for (std::size_t k = 0; k < n; ++k) {
        if (!keep.empty() && !keep[k]) continue;
        dx[off + k * stride] += yd[off + k * stride] * (gd[off + k * stride] - dot);
      }
    });
  };
  return a.tape->record(OpKind::Softmax, {a}, std::move(y), std::move(fn));
}

inline Var reshape_rowmajor(Var a) {
  const std::size_t r = a.value().rows(), c = a.value().cols();
  return a.tape->record(OpKind::Reshape, {a}, reshape_rowmajor(a.value()), [r, c](const Mat& g, std::span<Mat* const> pg) {
    if (pg[0]) *pg[0] += Mat(r, c, std::vector<double>(g.data().begin(), g.data().end()));
  });
}

/// Scalar (1x1) cross-entropy against constant one-hot targets.
inline Var cross_entropy(Var z, const Mat& y) {
  const double loss = cross_entropy(z.value(), y);
  const Mat* zv = &z.value();
  return z.tape->record(OpKind::CrossEntropy, {z}, Mat(1, 1, loss), [zv, y](const Mat& g, std::span<Mat* const> pg) {
    if (!pg[0]) return;
    const double s = g(0, 0);
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double zk = zv->data()[k];
      // d/dz of −y·ln(max(z, ε)); the clamp is flat below ε.
      if (y.data()[k] != 0.0 && zk > kProbabilityFloor) pg[0]->data()[k] -= s * y.data()[k] / zk;
    }
  });
}

inline Var sum(Var a) {
  return a.tape->record(OpKind::Sum, {a}, Mat(1, 1, sum(a.value())), [](const Mat& g, std::span<Mat* const> pg) {
    if (!pg[0]) return;
    for (double& v : pg[0]->data()) v += g(0, 0);
  });
}

inline Var add(Var a, Var b) {
  Tape& t = detail::same_tape(a, b, "add");
  return t.record(OpKind::Add, {a, b}, add(a.value(), b.value()), [](const Mat& g, std::span<Mat* const> pg) {
    if (pg[0]) *pg[0] += g;
    if (pg[1]) *pg[1] += g;
  });
}

inline Var scale(Var a, double s) {
  return a.tape->record(OpKind::Scale, {a}, scale(a.value(), s), [s](const Mat& g, std::span<Mat* const> pg) {
    if (pg[0]) *pg[0] += scale(g, s);
  });
}

/// Stacks 1xC rows into a BxC matrix.
inline Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  Tape& t = *rows.front().tape;
  const std::size_t c = rows.front().value().cols();
  Mat out(rows.size(), c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Mat& r = rows[i].value();
    if (r.rows() != 1 || r.cols() != c) throw ShapeError("stack_rows: row " + std::to_string(i) + " is " + shape_str(r));
    std::copy(r.data().begin(), r.data().end(), out.row(i).begin());
  }
  return t.record(OpKind::StackRows, std::vector<Var>(rows.begin(), rows.end()), std::move(out),
                  [](const Mat& g, std::span<Mat* const> pg) {
                    for (std::size_t i = 0; i < pg.size(); ++i)
                      if (pg[i])
                        for (std::size_t j = 0; j < g.cols(); ++j) pg[i]->data()[j] += g(i, j);
                  });
}

/// Zeroes every column whose mask entry is false.
inline Var mask_columns(Var a, const std::vector<bool>& mask) {
  if (mask.size() != a.value().cols()) throw ShapeError("mask_columns: mask length does not match column count");
  std::vector<bool> keep(mask.begin(), mask.end());
  Mat out = a.value();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      if (!keep[j]) out(i, j) = 0.0;
  return a.tape->record(OpKind::MaskColumns, {a}, std::move(out), [keep](const Mat& g, std::span<Mat* const> pg) {
    if (!pg[0]) return;
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j)
        if (keep[j]) (*pg[0])(i, j) += g(i, j);
  });
}

// ---------------------------------------------------------------------------
// Finite-difference checking
// ---------------------------------------------------------------------------

struct GradCheckEntry {
  std::size_t param = 0;  // index into the params passed to grad_check
  std::size_t index = 0;  // row-major entry within that parameter
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;
  double max_rel_error = 0.0;

  std::vector<GradCheckEntry> failures() const {
    std::vector<GradCheckEntry> bad;
    for (const auto& e : entries)
      if (e.rel_error > tolerance) bad.push_back(e);
    return bad;
  }
  bool passed() const { return max_rel_error <= tolerance; }
};

/// Builds the scalar to check from parameter handles on a fresh tape.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

/// Compares reverse-mode gradients of `f` with central differences
/// (f(x+h) − f(x−h)) / 2h, entry by entry. Relative error is
/// |analytic − numeric| / max(1, |analytic|, |numeric|).
inline GradCheckReport grad_check(const ScalarFn& f, std::span<const Mat> params, double step, double tol) {
  if (!(step > 0.0)) throw DomainError("grad_check: step must be positive");

  auto evaluate = [&](const std::vector<Mat>& values) {
    Tape tape;
    std::vector<Var> vars;
    for (const Mat& m : values) vars.push_back(tape.parameter(m));
    return f(tape, vars).value()(0, 0);
  };

  std::vector<Mat> values(params.begin(), params.end());
  Tape tape;
  std::vector<Var> vars;
  for (const Mat& m : values) vars.push_back(tape.parameter(m));
  const Gradients grads = tape.backward(f(tape, vars));

  GradCheckReport report;
  report.tolerance = tol;
  for (std::size_t p = 0; p < values.size(); ++p) {
    const Mat analytic = grads.of(vars[p]);
    for (std::size_t k = 0; k < values[p].size(); ++k) {
      const double orig = values[p].data()[k];
      values[p].data()[k] = orig + step;
      const double up = evaluate(values);
      values[p].data()[k] = orig - step;
      const double down = evaluate(values);
      values[p].data()[k] = orig;
      GradCheckEntry e{p, k, analytic.data()[k], (up - down) / (2.0 * step), 0.0};
      e.rel_error = std::abs(e.analytic - e.numeric) / std::max({1.0, std::abs(e.analytic), std::abs(e.numeric)});
      report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
      report.entries.push_back(e);
    }
  }
  return report;
}

}  // namespace pinet
