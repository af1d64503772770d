#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ketra/eval.hpp"
#include "ketra/models.hpp"

namespace ketra {

struct FitConfig {
  int max_iter = 100;
  double tol = 1e-6;
  CouplingMode coupling = CouplingMode::derived;
  std::uint64_t seed = 42;

  void validate() const;
};

enum class Termination { max_iter, delta_below_tol, warning_fallback };

std::string_view to_string(Termination t);

struct SweepRecord {
  int sweep = 0;
  ObjectiveTerms terms;
  double delta = 0.0;
  double seconds = 0.0;

  double objective() const { return terms.total(); }
};

struct SolverTrace {
  ObjectiveTerms initial;
  std::vector<SweepRecord> sweeps;
  Termination termination = Termination::max_iter;
  std::vector<std::string> warnings;
};

struct FitResult {
  FactorSet factors;
  SolverTrace trace;
};

/// max_i |z_prev(i) - z_next(i)| / |(z_prev(i) + z_next(i)) / 2|, 0/0 = 0.
double delta(std::span<const double> z_prev, std::span<const double> z_next);

/// A (or A1 then A2), column-major, followed by R_0 ... R_{K-1}, column-major.
/// Multipliers are not part of z.
Eigen::VectorXd flatten(const FactorSet& f);

/// Cold start from sub_seed(cfg.seed, init_factors), then sweeps until
/// delta < tol or max_iter sweeps. A sweep producing non-finite factors is
/// discarded and ends the fit with Termination::warning_fallback.
FitResult fit(ModelKind kind, const SparseTensor3& x, const Eigen::MatrixXd* c, const Hyperparams& h,
              const FitConfig& cfg);
FitResult fit_from(ModelKind kind, FactorSet init, const SparseTensor3& x, const Eigen::MatrixXd* c,
                   const Hyperparams& h, const FitConfig& cfg);

/// sweep,objective,f,g,f_s,f_rho,f_lag,delta,seconds
void write_trace_csv(const SolverTrace& t, const std::filesystem::path& path);

struct GridAxis {
  std::string name;  // lambda_A, lambda_r, lambda_e, lambda_s, lambda_a1, lambda_a2, rho, rank
  std::vector<double> values;
};

using HyperGrid = std::vector<GridAxis>;

/// The value lists of the standard grid for the coefficients `kind` uses.
HyperGrid default_grid(ModelKind kind);

void set_hyperparam(Hyperparams& h, const std::string& name, double value);
double get_hyperparam(const Hyperparams& h, const std::string& name);

enum class Metric { auc, f1_micro };

Metric parse_metric(std::string_view name);

struct SearchStep {
  std::string name;
  double value = 0.0;
  double score = 0.0;
  bool accepted = false;
};

struct SearchResult {
  Hyperparams best;
  double score = 0.0;
  std::vector<SearchStep> steps;  // one per evaluation
  int passes = 0;
};

using Evaluator = std::function<double(const Hyperparams&)>;

/// Coordinate descent: every axis in turn, each value tried on top of the
/// best configuration so far; a value is adopted only on strict
/// improvement, so ties keep the first configuration met. Candidates equal
/// to the current best are not re-evaluated. Passes repeat until one makes
/// no change, at most `max_passes`.
SearchResult coordinate_search(const Hyperparams& start, const HyperGrid& grid, const Evaluator& evaluate,
                               int max_passes = 3);

/// Fits on `x` for every candidate and scores `validation` with `metric`.
SearchResult hyper_search(ModelKind kind, const SparseTensor3& x, const Eigen::MatrixXd* c, const Hyperparams& start,
                          const HyperGrid& grid, const LabeledTriples& validation, const FitConfig& cfg,
                          Metric metric = Metric::auc, int max_passes = 3);

}  // namespace ketra
