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

// The `pinet` command line: dataset generation, training, cross-validation,
// the isomorphism and matrix-sweep experiments, and the self-check suites.
//
// Exit codes: 0 success, 1 invalid arguments or input, 2 runtime or numeric
// failure (including a self-check violation).

#pragma once

#include <CLI11.hpp>
#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <random>
#include <string>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "pinet/datagen.hpp"
#include "pinet/dataio.hpp"
#include "pinet/error.hpp"
#include "pinet/model.hpp"
#include "pinet/rng.hpp"
#include "pinet/selfcheck.hpp"
#include "pinet/stats.hpp"
#include "pinet/train.hpp"

namespace pinet {

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct IsoTrial {
  std::size_t train_size = 0;
  std::size_t trial = 0;
  double accuracy = 0.0;
};

/// For each size s and trial t, trains on s graphs drawn per class and tests
/// on every remaining graph. Trial (s, t) draws its split, initialisation and
/// batch order from derive_seed(train_config.seed, i), i its row index.
/// Rows come back in (size, trial) order whatever the thread count.
inline std::vector<IsoTrial> iso_experiment(const Dataset& ds, std::span<const std::size_t> sizes, std::size_t trials,
                                            const TrainConfig& train_config, const PiNetConfig& model_config,
                                            std::size_t threads = thread_count_from_env()) {
  if (ds.empty()) throw DomainError("iso_experiment: empty dataset");
  if (trials == 0) throw DomainError("iso_experiment: trials must be positive");
  std::vector<std::vector<std::size_t>> by_class(ds.class_count);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class.at(ds.graphs[i].label).push_back(i);
  for (std::size_t s : sizes) {
    if (s == 0) throw DomainError("iso_experiment: training size must be positive");
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      if (s >= by_class[c].size()) {
        throw DomainError("iso_experiment: training size " + std::to_string(s) + " leaves no test graph in class " +
                          std::to_string(c) + " (" + std::to_string(by_class[c].size()) + " graphs)");
      }
    }
  }

  std::vector<IsoTrial> rows(sizes.size() * trials);
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const std::size_t s = sizes[i / trials];
    const std::uint64_t seed = derive_seed(train_config.seed, i);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> train_idx, test_idx;
    for (auto members : by_class) {
      std::shuffle(members.begin(), members.end(), rng);
      train_idx.insert(train_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(s));
      test_idx.insert(test_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(s), members.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    TrainConfig tc = train_config;
    tc.seed = seed;
    PiNetConfig mc = model_config;
    mc.seed = seed;
    const FitResult fitted = fit(ds.subset(train_idx), tc, mc);
    rows[i] = {s, i % trials, evaluate(mc, fitted.params, ds.subset(test_idx).graphs)};
  });
  return rows;
}

struct SweepMode {
  bool learned = false;
  PQ pq{};
};

/// The four fixed corners (0,0), (0,1), (1,0), (1,1), then learned.
inline std::vector<SweepMode> sweep_modes() {
  return {{false, {0, 0}}, {false, {0, 1}}, {false, {1, 0}}, {false, {1, 1}}, {true, {}}};
}

struct SweepResult {
  SweepMode mode;
  EvalReport report;
};

/// Cross-validates once per mode with identical folds and seeds.
inline std::vector<SweepResult> matrix_sweep(const Dataset& ds, std::size_t k, const TrainConfig& train_config,
                                             PiNetConfig model_config, std::size_t threads = thread_count_from_env()) {
  std::vector<SweepResult> out;
  for (const SweepMode& mode : sweep_modes()) {
    model_config.learn_pq = mode.learned;
    model_config.fixed_pq = mode.pq;
    out.push_back({mode, cross_validate(ds, k, train_config, model_config, threads)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

namespace cli {

namespace fs = std::filesystem;

/// A TU directory (dataset name = directory name) or an internal file.
inline Dataset load_any(const fs::path& path) {
  if (fs::is_directory(path)) {
    const fs::path dir = path.has_filename() ? path : path.parent_path();
    return load_tu(dir, dir.filename().string());
  }
  return load_dataset(path);
}

struct HyperFlags {
  double learning_rate = 1e-3;
  std::size_t batch_size = 50;
  std::size_t epochs = 200;
  std::size_t width0 = 100;
  std::size_t width1 = 64;
  std::string attention_axis = "nodes";
  std::uint64_t seed = 0;
  std::vector<double> fixed_pq;  // empty: learn p and q

  void add_to(CLI::App& app) {
    app.add_option("--lr", learning_rate, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--batch-size", batch_size, "Minibatch size")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app.add_option("--width0", width0, "First hidden width F0")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--width1", width1, "Second hidden width F1")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--attention-axis", attention_axis, "Attention softmax axis")
        ->capture_default_str()
        ->check(CLI::IsMember({"nodes", "features"}));
    app.add_option("--seed", seed, "Seed for folds, initialisation and batch order")->capture_default_str();
    app.add_option("--fixed-pq", fixed_pq, "Fix p,q in every layer instead of learning them")
        ->expected(2)
        ->delimiter(',')
        ->check(CLI::Range(0.0, 1.0));
  }

  TrainConfig train_config() const {
    TrainConfig tc;
    tc.learning_rate = learning_rate;
    tc.batch_size = batch_size;
    tc.epochs = epochs;
    tc.seed = seed;
    return tc;
  }

  PiNetConfig model_config(const Dataset& ds) const {
    PiNetConfig mc;
    mc.input_width = ds.feature_width;
    mc.class_count = ds.class_count;
    mc.width0 = width0;
    mc.width1 = width1;
    mc.attention_axis = attention_axis == "features" ? AttentionAxis::Features : AttentionAxis::Nodes;
    mc.learn_pq = fixed_pq.empty();
    if (!fixed_pq.empty()) mc.fixed_pq = {fixed_pq[0], fixed_pq[1]};
    mc.seed = seed;
    return mc;
  }
};

inline nlohmann::json train_config_json(const TrainConfig& tc) {
  return {{"learning_rate", tc.learning_rate}, {"batch_size", tc.batch_size}, {"epochs", tc.epochs},
          {"seed", tc.seed}, {"threads", thread_count_from_env()}};
}

inline void echo_config(std::ostream& out, const std::string& command, nlohmann::json fields) {
  fields["command"] = command;
  out << "config " << fields.dump() << '\n';
}

inline void emit_table(const stats::CsvTable& table, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << stats::format_csv(table);
  } else {
    stats::write_results_csv(table, path);
    out << "wrote " << table.rows.size() << " rows to " << path << '\n';
  }
}

inline std::string mean_pm_std(std::span<const double> xs) {
  const auto s = stats::summarize(xs);
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << s.mean << " +/- " << s.stddev;
  return os.str();
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"PiNet: permutation-invariant graph classification"};
  app.name("pinet");
  app.require_subcommand(1);

  // gen-iso
  GenParams gen;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-iso", "Generate the graph isomorphism dataset");
  const CLI::Validator open_unit(
      [](std::string& s) -> std::string {
        try {
          const double v = std::stod(s);
          if (v > 0.0 && v < 1.0) return {};
        } catch (const std::exception&) {
        }
        return "edge probability must lie strictly between 0 and 1, got " + s;
      },
      "(0,1)");
  gen_cmd->add_option("--nodes", gen.nodes, "Nodes per graph (N)")->capture_default_str();
  gen_cmd->add_option("--classes", gen.classes, "Number of classes (C)")->capture_default_str();
  gen_cmd->add_option("--per-class", gen.per_class, "Graphs per class")->capture_default_str();
  gen_cmd->add_option("--edge-prob", gen.edge_prob, "Erdos-Renyi edge probability")
      ->capture_default_str()
      ->check(open_unit);
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Dataset file; provenance goes to <out>.provenance.json")->required();

  // train
  HyperFlags train_flags;
  std::string train_data, train_out;
  auto* train_cmd = app.add_subcommand("train", "Fit a model on a whole dataset and save a checkpoint");
  train_cmd->add_option("--dataset", train_data, "TU directory or dataset file")->required();
  train_cmd->add_option("--out", train_out, "Checkpoint path")->required();
  train_flags.add_to(*train_cmd);

  // cv
  HyperFlags cv_flags;
  std::string cv_data, cv_out;
  std::size_t cv_k = 10;
  auto* cv_cmd = app.add_subcommand("cv", "Stratified k-fold cross-validation");
  cv_cmd->add_option("--dataset", cv_data, "TU directory or dataset file")->required();
  cv_cmd->add_option("-k,--folds", cv_k, "Number of folds")->capture_default_str();
  cv_cmd->add_option("--out", cv_out, "CSV path; stdout when omitted");
  cv_flags.add_to(*cv_cmd);

  // iso-exp
  HyperFlags iso_flags;
  std::string iso_data, iso_out;
  std::vector<std::size_t> iso_sizes = {1, 2, 5, 10};
  std::size_t iso_trials = 10;
  auto* iso_cmd = app.add_subcommand("iso-exp", "Isomorphism experiment over training sizes");
  iso_cmd->add_option("--dataset", iso_data, "Dataset written by gen-iso")->required();
  iso_cmd->add_option("--train-sizes", iso_sizes, "Training graphs per class")->delimiter(',')->capture_default_str();
  iso_cmd->add_option("--trials", iso_trials, "Trials per size")->capture_default_str();
  iso_cmd->add_option("--out", iso_out, "CSV path; stdout when omitted");
  iso_flags.add_to(*iso_cmd);

  // sweep
  HyperFlags sweep_flags;
  std::string sweep_data, sweep_out;
  std::size_t sweep_k = 10;
  auto* sweep_cmd = app.add_subcommand("sweep", "Cross-validate the four fixed (p,q) corners and learned (p,q)");
  sweep_cmd->add_option("--dataset", sweep_data, "TU directory or dataset file")->required();
  sweep_cmd->add_option("-k,--folds", sweep_k, "Number of folds")->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "CSV path; stdout when omitted");
  sweep_flags.add_to(*sweep_cmd);

  // selfcheck
  selfcheck::Options check_opts;
  bool no_mask = false;
  auto* check_cmd = app.add_subcommand("selfcheck", "Run the invariance and gradient property suites");
  check_cmd->add_option("--seed", check_opts.seed, "Seed for the random cases")->capture_default_str();
  check_cmd->add_flag("--no-mask", no_mask)->group("");  // debug only

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*gen_cmd) {
      gen.validate();
      echo_config(out, "gen-iso",
                  {{"nodes", gen.nodes}, {"classes", gen.classes}, {"per_class", gen.per_class},
                   {"edge_prob", gen.edge_prob}, {"seed", gen.seed}, {"out", gen_out}});
      const IsoDataset iso = generate_iso_dataset(gen);
      save_dataset(iso.dataset, gen_out);
      save_provenance(iso.provenance, provenance_path_for(gen_out));
      out << "wrote " << iso.dataset.size() << " graphs to " << gen_out << '\n';
      return 0;
    }

    if (*train_cmd) {
      const Dataset ds = load_any(train_data);
      const TrainConfig tc = train_flags.train_config();
      const PiNetConfig mc = train_flags.model_config(ds);
      echo_config(out, "train",
                  {{"dataset", train_data}, {"graphs", ds.size()}, {"model", config_to_json(mc)},
                   {"train", train_config_json(tc)}, {"out", train_out}});
      const FitResult fitted = fit(ds, tc, mc);
      save_checkpoint(train_out, mc, fitted.params);
      out << "final loss " << (fitted.loss_trace.empty() ? 0.0 : fitted.loss_trace.back()) << ", training accuracy "
          << evaluate(mc, fitted.params, ds.graphs) << ", " << fitted.steps << " steps\n";
      return 0;
    }

    if (*cv_cmd) {
      const Dataset ds = load_any(cv_data);
      const TrainConfig tc = cv_flags.train_config();
      const PiNetConfig mc = cv_flags.model_config(ds);
      echo_config(out, "cv",
                  {{"dataset", cv_data}, {"graphs", ds.size()}, {"k", cv_k}, {"model", config_to_json(mc)},
                   {"train", train_config_json(tc)}});
      const EvalReport report = cross_validate(ds, cv_k, tc, mc);
      stats::CsvTable table{{"dataset", "fold", "accuracy"}, {}};
      for (std::size_t f = 0; f < cv_k; ++f)
        table.rows.push_back({ds.name, static_cast<std::int64_t>(f), report.fold_accuracies[f]});
      emit_table(table, cv_out, out);
      out << ds.name << " accuracy " << mean_pm_std(report.fold_accuracies) << " over " << cv_k << " folds\n";
      return 0;
    }

    if (*iso_cmd) {
      const Dataset ds = load_dataset(iso_data);
      const fs::path prov_path = provenance_path_for(iso_data);
      if (!fs::exists(prov_path)) {
        throw DomainError("iso-exp: '" + prov_path.string() + "' not found; generate the dataset with gen-iso");
      }
      const IsoProvenance prov = load_provenance(prov_path);
      if (prov.permutations.size() != ds.size()) throw FormatError("iso-exp: provenance does not match the dataset");
      const TrainConfig tc = iso_flags.train_config();
      const PiNetConfig mc = iso_flags.model_config(ds);
      echo_config(out, "iso-exp",
                  {{"dataset", iso_data}, {"graphs", ds.size()}, {"train_sizes", iso_sizes}, {"trials", iso_trials},
                   {"model", config_to_json(mc)}, {"train", train_config_json(tc)}});
      const auto rows = iso_experiment(ds, iso_sizes, iso_trials, tc, mc);
      stats::CsvTable table{{"train_size", "trial", "accuracy"}, {}};
      for (const auto& r : rows)
        table.rows.push_back({static_cast<std::int64_t>(r.train_size), static_cast<std::int64_t>(r.trial), r.accuracy});
      emit_table(table, iso_out, out);
      for (std::size_t i = 0; i < iso_sizes.size(); ++i) {
        std::vector<double> acc;
        for (std::size_t t = 0; t < iso_trials; ++t) acc.push_back(rows[i * iso_trials + t].accuracy);
        out << "train size " << iso_sizes[i] << ": accuracy " << mean_pm_std(acc) << '\n';
      }
      return 0;
    }

    if (*sweep_cmd) {
      const Dataset ds = load_any(sweep_data);
      const TrainConfig tc = sweep_flags.train_config();
      const PiNetConfig mc = sweep_flags.model_config(ds);
      echo_config(out, "sweep",
                  {{"dataset", sweep_data}, {"graphs", ds.size()}, {"k", sweep_k}, {"model", config_to_json(mc)},
                   {"train", train_config_json(tc)}});
      const auto results = matrix_sweep(ds, sweep_k, tc, mc);
      stats::CsvTable table{{"dataset", "p", "q", "mode", "fold", "accuracy"}, {}};
      for (const auto& r : results) {
        for (std::size_t f = 0; f < sweep_k; ++f) {
          const stats::CsvCell p = r.mode.learned ? stats::CsvCell{std::string()} : stats::CsvCell{r.mode.pq.p};
          const stats::CsvCell q = r.mode.learned ? stats::CsvCell{std::string()} : stats::CsvCell{r.mode.pq.q};
          table.rows.push_back({ds.name, p, q, std::string(r.mode.learned ? "learned" : "fixed"),
                                static_cast<std::int64_t>(f), r.report.fold_accuracies[f]});
        }
      }
      emit_table(table, sweep_out, out);
      for (const auto& r : results) {
        if (r.mode.learned) {
          out << "learned";
        } else {
          out << "fixed p=" << r.mode.pq.p << " q=" << r.mode.pq.q;
        }
        out << ": accuracy " << mean_pm_std(r.report.fold_accuracies) << '\n';
      }
      return 0;
    }

    if (*check_cmd) {
      check_opts.mask_padding = !no_mask;
      echo_config(out, "selfcheck", {{"seed", check_opts.seed}, {"mask_padding", check_opts.mask_padding}});
      bool ok = true;
      for (const auto& s : selfcheck::run_all(check_opts)) {
        out << (s.passed() ? "PASS " : "FAIL ") << s.name << ": " << s.cases << " cases, " << s.failures
            << " failures, max error " << s.max_error << " (tolerance " << s.tolerance << ")\n";
        if (!s.passed()) {
          err << s.name << ": first failure " << s.first_failure << '\n';
          ok = false;
        }
      }
      return ok ? 0 : 2;
    }
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::logic_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace cli
}  // namespace pinet
