#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ketra/eval.hpp"
#include "ketra/similarity.hpp"
#include "ketra/solver.hpp"

namespace ketra {

enum class EvalMode { uniform, weighted, external };

EvalMode parse_eval_mode(std::string_view name);
std::string_view to_string(EvalMode m);

struct ProtocolConfig {
  ModelKind model = ModelKind::quad_constraint;
  Encoding encoding = Encoding::transitivity;
  Hyperparams hyper;
  FitConfig fit;
  EvalMode mode = EvalMode::uniform;
  WeightedMode weighted = WeightedMode::keep_all;
  std::size_t per_slice = 0;  // 0: 10 below 15,000 entities, else 200
  int repeats = 5;
  std::uint64_t seed = 42;  // repeat i runs with seed + i
  std::filesystem::path test_file;  // weighted: positives; external: labeled items
  bool search = false;              // coordinate search on the validation split first
  Metric search_metric = Metric::auc;

  void validate() const;
};

std::size_t default_per_slice(std::size_t n_entities);

struct RepeatResult {
  std::uint64_t seed = 0;
  EvalReport report;
  double validation_auc = 0.0;
  Hyperparams hyper;
  SolverTrace trace;
  std::size_t train_facts = 0;
  std::size_t validation_items = 0;
  std::vector<std::string> warnings;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for one repeat
};

Summary summarize(const std::vector<double>& v);

struct ProtocolResult {
  std::vector<RepeatResult> repeats;
  Summary auc, f1_micro, f1_macro;
};

/// One repeat: test split from the full graph, a validation split carved
/// from what remains (also masked), similarity from the training tensor, a
/// fit, a threshold tuned on validation, and the test report.
RepeatResult run_once(const Dataset& data, const ProtocolConfig& cfg, std::uint64_t seed);
ProtocolResult run_protocol(const Dataset& data, const ProtocolConfig& cfg);

struct DensityRow {
  double fraction = 0.0;
  std::size_t facts = 0;
  std::vector<ModelKind> models;
  std::vector<Summary> auc;  // parallel to models
};

/// For each fraction, subsample subjects and run the protocol per model.
/// Each fraction and model uses the same seeds, so fraction 1 reproduces
/// run_protocol on the full dataset.
std::vector<DensityRow> density_sweep(const Dataset& data, const std::vector<double>& fractions,
                                      const std::vector<ModelKind>& models, const ProtocolConfig& cfg);

void write_density_csv(const std::vector<DensityRow>& rows, const std::filesystem::path& path);
void write_protocol_csv(const ProtocolResult& r, const std::filesystem::path& path);

}  // namespace ketra
