#include "ketra/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ketra/error.hpp"
#include "ketra/seeds.hpp"

namespace ketra {

void FitConfig::validate() const {
  if (max_iter < 1) throw ValidationError("max_iter must be at least 1");
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::max_iter: return "max_iter";
    case Termination::delta_below_tol: return "delta_below_tol";
    case Termination::warning_fallback: return "warning_fallback";
  }
  return "?";
}

double delta(std::span<const double> z_prev, std::span<const double> z_next) {
  if (z_prev.size() != z_next.size()) throw ValidationError("delta: length mismatch");
  double out = 0.0;
  for (std::size_t i = 0; i < z_prev.size(); ++i) {
    const double num = z_prev[i] - z_next[i];
    if (num == 0.0) continue;
    const double mean = 0.5 * (z_prev[i] + z_next[i]);
    const double d = mean == 0.0 ? std::numeric_limits<double>::infinity() : std::abs(num / mean);
    out = std::max(out, d);
  }
  return out;
}

Eigen::VectorXd flatten(const FactorSet& f) {
  Eigen::Index n = 0;
  std::vector<const Eigen::MatrixXd*> parts;
  if (f.kind == FactorKind::quadratic) {
    parts.push_back(&f.a);
  } else {
    parts.push_back(&f.a1);
    parts.push_back(&f.a2);
  }
  for (const auto& rk : f.r) parts.push_back(&rk);
  for (const auto* p : parts) n += p->size();
  Eigen::VectorXd z(n);
  Eigen::Index at = 0;
  for (const auto* p : parts) {
    z.segment(at, p->size()) = Eigen::Map<const Eigen::VectorXd>(p->data(), p->size());
    at += p->size();
  }
  return z;
}

FitResult fit_from(ModelKind kind, FactorSet init, const SparseTensor3& x, const Eigen::MatrixXd* c,
                   const Hyperparams& h, const FitConfig& cfg) {
  cfg.validate();
  h.validate();
  if (uses_similarity(kind) && !c) {
    throw ValidationError(std::string(to_string(kind)) + " needs a similarity matrix");
  }
  FitResult res;
  res.factors = std::move(init);
  res.trace.initial = objective_value(kind, res.factors, x, c, h);
  SweepOptions opt;
  opt.coupling = cfg.coupling;
  std::vector<std::string> sweep_notes;
  opt.warnings = &sweep_notes;
  int noted_sweeps = 0;
  std::string first_note;
  auto flush_notes = [&] {
    if (noted_sweeps == 0) return;
    res.trace.warnings.push_back(first_note + " (" + std::to_string(noted_sweeps) + " of " +
                                 std::to_string(res.trace.sweeps.size()) + " sweeps)");
  };
  Eigen::VectorXd z = flatten(res.factors);
  using clock = std::chrono::steady_clock;
  for (int t = 1; t <= cfg.max_iter; ++t) {
    const auto start = clock::now();
    sweep_notes.clear();
    FactorSet next = sweep(kind, res.factors, x, c, h, opt);
    if (!sweep_notes.empty()) {
      if (noted_sweeps++ == 0) first_note = "sweep " + std::to_string(t) + ": " + sweep_notes.front();
    }
    if (!next.all_finite()) {
      flush_notes();
      res.trace.warnings.push_back("sweep " + std::to_string(t) +
                                   " produced non-finite factors; keeping the previous iterate");
      res.trace.termination = Termination::warning_fallback;
      return res;
    }
    Eigen::VectorXd zn = flatten(next);
    SweepRecord rec;
    rec.sweep = t;
    rec.delta = delta({z.data(), static_cast<std::size_t>(z.size())}, {zn.data(), static_cast<std::size_t>(zn.size())});
    res.factors = std::move(next);
    rec.terms = objective_value(kind, res.factors, x, c, h);
    rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
    res.trace.sweeps.push_back(rec);
    z = std::move(zn);
    if (rec.delta < cfg.tol) {
      res.trace.termination = Termination::delta_below_tol;
      flush_notes();
      return res;
    }
  }
  res.trace.termination = Termination::max_iter;
  flush_notes();
  return res;
}

FitResult fit(ModelKind kind, const SparseTensor3& x, const Eigen::MatrixXd* c, const Hyperparams& h,
              const FitConfig& cfg) {
  h.validate();
  auto init = init_factors(kind, x.n_entities(), x.n_relations(), h, sub_seed(cfg.seed, SeedStream::init_factors));
  return fit_from(kind, std::move(init), x, c, h, cfg);
}

void write_trace_csv(const SolverTrace& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "sweep,objective,f,g,f_s,f_rho,f_lag,delta,seconds\n";
  char buf[512];
  for (const auto& r : t.sweeps) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.6f\n", r.sweep, r.objective(),
                  r.terms.f, r.terms.g, r.terms.f_s, r.terms.f_rho, r.terms.f_lag, r.delta, r.seconds);
    out << buf;
  }
}

HyperGrid default_grid(ModelKind kind) {
  const GridAxis a{"lambda_A", {0.0001, 0.01, 0.1, 0, 1, 10, 100, 1000}};
  const GridAxis r{"lambda_r", {0.002, 0.2, 0.01, 0.1, 0, 1, 10, 100, 1000}};
  const GridAxis e{"lambda_e", {1, 2, 5, 10}};
  const GridAxis s{"lambda_s", {0.00002, 0.02, 0.2, 0.1, 0, 1}};
  switch (kind) {
    case ModelKind::rescal:
    case ModelKind::nn_rescal:
    case ModelKind::quad_constraint: return {a, r};
    case ModelKind::quad_reg: return {a, r, s};
    case ModelKind::linear_reg: return {a, r, e, s};
    case ModelKind::linear_constraint: return {a, r, e};
  }
  return {};
}

void set_hyperparam(Hyperparams& h, const std::string& name, double value) {
  if (name == "lambda_A") h.lambda_A = value;
  else if (name == "lambda_r") h.lambda_r = value;
  else if (name == "lambda_e") h.lambda_e = value;
  else if (name == "lambda_s") h.lambda_s = value;
  else if (name == "lambda_a1") h.lambda_a1 = value;
  else if (name == "lambda_a2") h.lambda_a2 = value;
  else if (name == "rho") h.rho = value;
  else if (name == "lagrange_step") h.lagrange_step = value;
  else if (name == "rank") {
    if (value < 0 || value != std::floor(value)) throw ValidationError("rank must be a nonnegative integer");
    h.rank = static_cast<int>(value);
  } else {
    throw ValidationError("unknown hyperparameter '" + name + "'");
  }
}

double get_hyperparam(const Hyperparams& h, const std::string& name) {
  if (name == "lambda_A") return h.lambda_A;
  if (name == "lambda_r") return h.lambda_r;
  if (name == "lambda_e") return h.lambda_e;
  if (name == "lambda_s") return h.lambda_s;
  if (name == "lambda_a1") return h.a1();
  if (name == "lambda_a2") return h.a2();
  if (name == "rho") return h.rho;
  if (name == "lagrange_step") return h.lagrange_step;
  if (name == "rank") return h.rank;
  throw ValidationError("unknown hyperparameter '" + name + "'");
}

Metric parse_metric(std::string_view name) {
  if (name == "auc") return Metric::auc;
  if (name == "f1_micro") return Metric::f1_micro;
  throw ValidationError("unknown metric '" + std::string(name) + "' (expected auc|f1_micro)");
}

SearchResult coordinate_search(const Hyperparams& start, const HyperGrid& grid, const Evaluator& evaluate,
                               int max_passes) {
  if (grid.empty()) throw ValidationError("hyperparameter grid is empty");
  for (const auto& axis : grid) {
    if (axis.values.empty()) throw ValidationError("grid axis " + axis.name + " has no values");
  }
  SearchResult res;
  res.best = start;
  res.score = -std::numeric_limits<double>::infinity();
  bool scored = false;
  for (int pass = 0; pass < max_passes; ++pass) {
    ++res.passes;
    bool changed = false;
    for (const auto& axis : grid) {
      for (double v : axis.values) {
        Hyperparams cand = res.best;
        set_hyperparam(cand, axis.name, v);
        if (scored && get_hyperparam(cand, axis.name) == get_hyperparam(res.best, axis.name)) continue;
        const double s = evaluate(cand);
        const bool better = !scored || s > res.score;
        res.steps.push_back({axis.name, v, s, better});
        if (better) {
          changed = changed || scored;
          res.best = cand;
          res.score = s;
          scored = true;
        }
      }
    }
    if (!changed) break;
  }
  return res;
}

SearchResult hyper_search(ModelKind kind, const SparseTensor3& x, const Eigen::MatrixXd* c, const Hyperparams& start,
                          const HyperGrid& grid, const LabeledTriples& validation, const FitConfig& cfg, Metric metric,
                          int max_passes) {
  if (validation.items.empty()) throw ValidationError("validation set is empty");
  const auto labels = validation.labels();
  auto evaluate = [&](const Hyperparams& h) {
    const auto res = fit(kind, x, c, h, cfg);
    const auto scores = score_items(res.factors, validation);
    if (metric == Metric::auc) return auc(scores, labels);
    const double tau = tune_threshold(scores, labels);
    return report_from_scores(validation, scores, tau).f1_micro;
  };
  return coordinate_search(start, grid, evaluate, max_passes);
}

}  // namespace ketra
