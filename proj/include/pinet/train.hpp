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
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "pinet/dataio.hpp"
#include "pinet/error.hpp"
#include "pinet/graph.hpp"
#include "pinet/model.hpp"
#include "pinet/stats.hpp"
#include "pinet/tensor.hpp"

namespace pinet {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 50;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw DomainError("TrainConfig: learning rate must be positive");
    if (batch_size < 1) throw DomainError("TrainConfig: batch size must be at least 1");
    if (epochs < 1) throw DomainError("TrainConfig: epochs must be at least 1");
  }
};

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  SlotArray m;
  SlotArray v;
  std::uint64_t t = 0;

  static AdamState zeros_like(const PiNetParams& params) {
    AdamState s;
    for (std::size_t i = 0; i < kSlotCount; ++i) {
      s.m[i] = Mat(params.tensors[i].rows(), params.tensors[i].cols());
      s.v[i] = s.m[i];
    }
    return s;
  }
};

/// One bias-corrected Adam update. In fixed-(p,q) mode the p and q slots are
/// left alone; in learned mode they are clamped to [0,1] afterwards.
inline void adam_step(PiNetParams& params, const SlotArray& grads, AdamState& state, double lr,
                      const PiNetConfig& config) {
  for (std::size_t s = 0; s < kSlotCount; ++s) {
    if (!grads[s].same_shape(params.tensors[s]) || !state.m[s].same_shape(params.tensors[s])) {
      throw ShapeError("adam_step: shape mismatch for " + std::string(kSlotNames[s]));
    }
    if (!all_finite(grads[s])) {
      throw NumericError("adam_step: non-finite gradient for parameter " + std::string(kSlotNames[s]));
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(state.t));
  for (std::size_t s = 0; s < kSlotCount; ++s) {
    if (is_pq_slot(s) && !config.learn_pq) continue;
    auto w = params.tensors[s].data();
    auto m = state.m[s].data();
    auto v = state.v[s].data();
    auto g = grads[s].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = AdamState::kBeta1 * m[i] + (1.0 - AdamState::kBeta1) * g[i];
      v[i] = AdamState::kBeta2 * v[i] + (1.0 - AdamState::kBeta2) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + AdamState::kEpsilon);
    }
  }
  if (config.learn_pq) params = clamp_pq(std::move(params));
}

struct FitResult {
  PiNetParams params;
  std::vector<double> loss_trace;  // summed training loss per epoch
  std::uint64_t steps = 0;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Mini-batch Adam from init_params(model_config). The batch order is drawn
/// from train_config.seed; the last partial batch is kept.
inline FitResult fit(const Dataset& ds, const TrainConfig& train_config, const PiNetConfig& model_config,
                     const EpochCallback& on_epoch = {}) {
  if (ds.empty()) throw DomainError("fit: empty dataset");
  train_config.validate();
  model_config.validate();
  if (ds.feature_width != model_config.input_width || ds.class_count != model_config.class_count) {
    throw ShapeError("fit: dataset has d=" + std::to_string(ds.feature_width) + ", C=" + std::to_string(ds.class_count) +
                     " but the model expects d=" + std::to_string(model_config.input_width) +
                     ", C=" + std::to_string(model_config.class_count));
  }

  FitResult out;
  out.params = init_params(model_config);
  AdamState state = AdamState::zeros_like(out.params);
  std::mt19937_64 rng(train_config.seed);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<LabeledGraph> chunk;

  for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
    if (train_config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += train_config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + train_config.batch_size);
      chunk.clear();
      for (std::size_t i = start; i < stop; ++i) chunk.push_back(ds.graphs[order[i]]);
      const Batch batch = make_batch(chunk, model_config.class_count);
      const LossAndGradients lg = loss_and_gradients(model_config, out.params, batch);
      if (!std::isfinite(lg.loss)) throw NumericError("fit: non-finite loss at epoch " + std::to_string(epoch + 1));
      adam_step(out.params, lg.gradients, state, train_config.learning_rate, model_config);
      epoch_loss += lg.loss;
    }
    for (std::size_t s = 0; s < kSlotCount; ++s) {
      if (!all_finite(out.params.tensors[s])) {
        throw NumericError("fit: parameter " + std::string(kSlotNames[s]) + " became non-finite at epoch " +
                           std::to_string(epoch + 1));
      }
    }
    out.loss_trace.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  out.steps = state.t;
  return out;
}

/// Fraction of graphs whose argmax prediction matches the label.
inline double evaluate(const PiNetConfig& config, const PiNetParams& params, std::span<const LabeledGraph> graphs) {
  if (graphs.empty()) throw DomainError("evaluate: no graphs");
  std::size_t correct = 0;
  for (const auto& g : graphs) correct += predicted_class(forward(config, params, g)) == g.label;
  return static_cast<double>(correct) / static_cast<double>(graphs.size());
}

/// k disjoint test folds. Each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped, so both per-class and total
/// fold sizes differ by at most one. Indices within a fold are sorted.
inline std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const std::size_t> labels, std::size_t k,
                                                              std::uint64_t seed) {
  if (k < 2) throw DomainError("stratified_kfold: k must be at least 2");
  if (k > labels.size()) {
    throw DomainError("stratified_kfold: k=" + std::to_string(k) + " exceeds dataset size " + std::to_string(labels.size()));
  }
  const std::size_t classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) {
      folds[next].push_back(i);
      next = (next + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

struct EvalReport {
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<std::uint64_t> fold_seeds;
};

/// Worker count from PINET_THREADS; 1 when unset or unparsable.
inline std::size_t thread_count_from_env() {
  const char* raw = std::getenv("PINET_THREADS");
  if (raw == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || v < 1) return 1;
  return static_cast<std::size_t>(v);
}

/// Runs `job(i)` for i in [0, n) on up to `threads` workers. The first
/// exception is rethrown after all workers join.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

using FoldCallback = std::function<void(std::size_t fold, double accuracy)>;

/// Folds come from train_config.seed. Fold i trains a fresh model whose
/// initialisation and batch order both use seed + i.
inline EvalReport cross_validate(const Dataset& ds, std::size_t k, const TrainConfig& train_config,
                                 const PiNetConfig& model_config, std::size_t threads = thread_count_from_env(),
                                 const FoldCallback& on_fold = {}) {
  if (ds.empty()) throw DomainError("cross_validate: empty dataset");
  const auto labels = ds.labels();
  const auto folds = stratified_kfold(labels, k, train_config.seed);

  EvalReport report;
  report.fold_accuracies.assign(k, 0.0);
  report.fold_seeds.resize(k);
  for (std::size_t f = 0; f < k; ++f) report.fold_seeds[f] = train_config.seed + f;

  std::mutex callback_mutex;
  parallel_for(k, threads, [&](std::size_t f) {
    std::vector<std::size_t> train_idx;
    for (std::size_t g = 0; g < k; ++g)
      if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
    std::sort(train_idx.begin(), train_idx.end());
    const Dataset train_set = ds.subset(train_idx);
    const Dataset test_set = ds.subset(folds[f]);

    TrainConfig tc = train_config;
    tc.seed = report.fold_seeds[f];
    PiNetConfig mc = model_config;
    mc.seed = report.fold_seeds[f];
    const FitResult fitted = fit(train_set, tc, mc);
    report.fold_accuracies[f] = evaluate(mc, fitted.params, test_set.graphs);
    if (on_fold) {
      std::lock_guard lock(callback_mutex);
      on_fold(f, report.fold_accuracies[f]);
    }
  });

  const auto summary = stats::summarize(report.fold_accuracies);
  report.mean = summary.mean;
  report.stddev = summary.stddev;
  return report;
}

}  // namespace pinet
