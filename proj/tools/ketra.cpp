// ketra: stats | similarity | train | evaluate | sweep

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ketra/config.hpp"
#include "ketra/error.hpp"
#include "ketra/factor_io.hpp"
#include "ketra/kernels.hpp"
#include "ketra/protocol.hpp"
#include "ketra/similarity.hpp"
#include "ketra/solver.hpp"

namespace fs = std::filesystem;
using namespace ketra;

namespace {

struct Common {
  std::string config;
  std::string dataset;
  std::string model;
  std::string encoding;
  std::string out;
  std::optional<long long> seed;
  std::optional<int> threads;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key=value configuration file");
  cmd->add_option("--dataset", c.dataset, "dataset directory");
  cmd->add_option("--model", c.model, "rescal|nn_rescal|quad_reg|quad_constraint|linear_reg|linear_constraint");
  cmd->add_option("--encoding", c.encoding,
                  "similarity encoding: symmetric|agency|patient|transitivity|reverse_transitivity");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "master seed (default 42)");
  cmd->add_option("--threads", c.threads, "worker threads (0: all cores)");
  cmd->add_option("--set", c.sets, "override a configuration key, key=value")->take_all();
}

// Saved factors carry their own model, so the model checks are skipped for them.
RunConfig resolve(const Common& c, bool check_model = true) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  for (const auto& s : c.sets) {
    const auto [k, v] = split_assignment(s);
    cfg.set(k, v);
  }
  if (!c.dataset.empty()) cfg.set("dataset", c.dataset);
  if (!c.model.empty()) cfg.set("model.kind", c.model);
  if (!c.encoding.empty()) cfg.set("model.encoding", c.encoding);
  if (!c.out.empty()) cfg.set("output", c.out);
  if (c.seed) cfg.set("seed", std::to_string(*c.seed));
  if (c.threads) cfg.set("threads", std::to_string(*c.threads));
  if (cfg.dataset_dir.empty()) throw ValidationError("no dataset given (--dataset or dataset=)");
  if (check_model) cfg.validate();
  kernels::set_threads(cfg.threads);
  return cfg;
}

void print_warnings(const std::vector<std::string>& w) {
  for (const auto& s : w) std::cerr << "warning: " << s << '\n';
}

Dataset load(const RunConfig& cfg) { return load_dataset(cfg.dataset_dir, cfg.literal_policy); }

KnowledgeGraph training_graph(const Dataset& d, const std::string& split) {
  if (split == "all") return d.kg;
  auto it = d.splits.find(split);
  if (it == d.splits.end()) throw ValidationError("dataset has no split '" + split + "'");
  return d.kg.with_triples(it->second);
}

int cmd_stats(const std::string& dir, const std::string& format, const std::string& policy) {
  const auto d = load_dataset(dir, parse_literal_policy(policy));
  const auto s = stats(build_tensor(d.kg));
  if (format == "csv") {
    std::printf("entities,relations,facts,avg_degree,density\n%zu,%zu,%zu,%.6f,%.6f\n", s.n_entities, s.n_relations,
                s.n_facts, s.avg_degree, s.graph_density);
  } else if (format == "text") {
    std::cout << format_ingest_report(d);
    std::printf("entities    %zu\nrelations   %zu\nfacts       %zu\navg degree  %.4f\ndensity     %.5f\n", s.n_entities,
                s.n_relations, s.n_facts, s.avg_degree, s.graph_density);
  } else {
    throw ValidationError("--format must be text or csv");
  }
  return 0;
}

int cmd_similarity(const std::string& dir, const std::string& encoding, const std::string& out) {
  const auto enc = parse_encoding(encoding);
  const auto d = load_dataset(dir);
  const auto sim = compute_similarity(build_tensor(d.kg), enc);
  write_similarity_csv(sim, d.kg.relations, out);
  std::cout << "wrote " << sim.size() << "x" << sim.size() << " " << to_string(enc) << " similarity to " << out << '\n';
  return 0;
}

int cmd_train(const Common& c) {
  const auto cfg = resolve(c);
  const auto d = load(cfg);
  const auto kg = training_graph(d, cfg.train_split);
  const auto x = build_tensor(kg);
  std::optional<SimilarityMatrix> sim;
  if (uses_similarity(cfg.protocol.model)) sim = compute_similarity(x, *cfg.encoding);
  FitConfig fc = cfg.protocol.fit;
  fc.seed = cfg.protocol.seed;
  const auto res = fit(cfg.protocol.model, x, sim ? &sim->c() : nullptr, cfg.protocol.hyper, fc);
  print_warnings(res.trace.warnings);

  fs::create_directories(cfg.output_dir);
  auto m = cfg.to_manifest();
  m["model.rank"] = std::to_string(res.factors.rank());
  m["sweeps"] = std::to_string(res.trace.sweeps.size());
  m["termination"] = to_string(res.trace.termination);
  m["train_facts"] = std::to_string(x.nnz());
  write_factors(res.factors, cfg.output_dir / "factors", m);
  write_trace_csv(res.trace, cfg.output_dir / "trace.csv");
  write_manifest(m, cfg.output_dir / "manifest.txt");
  const double obj = res.trace.sweeps.empty() ? res.trace.initial.total() : res.trace.sweeps.back().objective();
  std::printf("%s: %zu sweeps, %s, objective %.6g\n", std::string(to_string(cfg.protocol.model)).c_str(),
              res.trace.sweeps.size(), std::string(to_string(res.trace.termination)).c_str(), obj);
  return 0;
}

int evaluate_factors(const RunConfig& cfg, const Dataset& d, const fs::path& dir) {
  const auto f = read_factors(dir);
  if (f.n_entities() != d.kg.n_entities() || f.n_relations() != d.kg.n_relations()) {
    throw ValidationError("factors are " + std::to_string(f.n_entities()) + " entities x " +
                          std::to_string(f.n_relations()) + " relations; dataset has " +
                          std::to_string(d.kg.n_entities()) + " x " + std::to_string(d.kg.n_relations()));
  }
  if (cfg.protocol.test_file.empty()) throw ValidationError("evaluating saved factors needs eval.test_file");
  const auto test = read_labeled_triples(cfg.protocol.test_file, d.kg);
  double tau;
  if (cfg.threshold) {
    tau = *cfg.threshold;
  } else if (!cfg.validation_file.empty()) {
    const auto val = read_labeled_triples(cfg.validation_file, d.kg);
    tau = tune_threshold(score_items(f, val), val.labels());
  } else {
    throw ValidationError("saved factors need eval.threshold or eval.validation_file");
  }
  const auto rep = classify_and_report(f, test, tau);
  fs::create_directories(cfg.output_dir);
  write_report_csv(rep, d.kg.relations, cfg.output_dir / "overall.csv", cfg.output_dir / "per_relation.csv");
  const auto text = format_report(rep, d.kg.relations);
  std::ofstream(cfg.output_dir / "summary.txt") << text;
  std::cout << text;
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& factors, std::optional<double> threshold,
                 const std::string& test_file) {
  auto cfg = resolve(c, factors.empty());
  if (threshold) cfg.threshold = threshold;
  if (!test_file.empty()) cfg.protocol.test_file = test_file;
  const auto d = load(cfg);
  if (!factors.empty()) return evaluate_factors(cfg, d, factors);

  cfg.validate();
  const auto res = run_protocol(d, cfg.protocol);
  fs::create_directories(cfg.output_dir);
  write_protocol_csv(res, cfg.output_dir / "overall.csv");
  std::string summary;
  char buf[256];
  for (const auto& r : res.repeats) {
    print_warnings(r.warnings);
    print_warnings(r.trace.warnings);
    write_report_csv(r.report, d.kg.relations, cfg.output_dir / ("overall_seed" + std::to_string(r.seed) + ".csv"),
                     cfg.output_dir / ("per_relation_seed" + std::to_string(r.seed) + ".csv"));
    std::snprintf(buf, sizeof buf, "seed %llu: auc %.4f  f1 micro %.4f  macro %.4f  (%zu items, tau %.4g)",
                  static_cast<unsigned long long>(r.seed), r.report.auc, r.report.f1_micro, r.report.f1_macro,
                  r.report.scores.size(), r.report.threshold);
    summary += buf;
    if (cfg.protocol.search) {
      summary += "  lambda_A=" + format_double(r.hyper.lambda_A) + " lambda_r=" + format_double(r.hyper.lambda_r);
      const auto m = cfg.protocol.model;
      if (m == ModelKind::quad_reg || m == ModelKind::linear_reg) summary += " lambda_s=" + format_double(r.hyper.lambda_s);
      if (factor_kind(cfg.protocol.model) == FactorKind::linear) {
        summary += " lambda_e=" + format_double(r.hyper.lambda_e);
      }
    }
    summary += "\n";
  }
  std::snprintf(buf, sizeof buf, "%s: auc %.4f +- %.4f  f1 micro %.4f +- %.4f  macro %.4f +- %.4f\n",
                std::string(to_string(cfg.protocol.model)).c_str(), res.auc.mean, res.auc.std, res.f1_micro.mean,
                res.f1_micro.std, res.f1_macro.mean, res.f1_macro.std);
  summary += buf;
  std::ofstream(cfg.output_dir / "summary.txt") << summary;
  write_manifest(cfg.to_manifest(), cfg.output_dir / "manifest.txt");
  std::cout << summary;
  return 0;
}

int cmd_sweep(const Common& c, const std::string& fractions, const std::string& models) {
  auto cfg = resolve(c, false);
  if (!fractions.empty()) cfg.set("sweep.fractions", fractions);
  if (!models.empty()) cfg.set("sweep.models", models);
  for (auto m : cfg.sweep_models) {
    if (uses_similarity(m) && !cfg.encoding) {
      throw ValidationError("model " + std::string(to_string(m)) + " needs model.encoding");
    }
  }
  if (!cfg.sweep_models.empty()) cfg.protocol.model = cfg.sweep_models.front();
  cfg.validate();
  const auto d = load(cfg);
  const auto rows = density_sweep(d, cfg.fractions, cfg.sweep_models, cfg.protocol);
  fs::create_directories(cfg.output_dir);
  write_density_csv(rows, cfg.output_dir / "density.csv");
  write_manifest(cfg.to_manifest(), cfg.output_dir / "manifest.txt");
  for (const auto& r : rows) {
    std::printf("%.4g (%zu facts)", r.fraction, r.facts);
    for (std::size_t i = 0; i < r.models.size(); ++i) {
      std::printf("  %s %.4f", std::string(to_string(r.models[i])).c_str(), r.auc[i].mean);
    }
    std::printf("\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity-regularized tensor factorization for knowledge graphs"};
  app.require_subcommand(1);

  std::string dir, format = "text", policy = "keep";
  auto* st = app.add_subcommand("stats", "dataset statistics");
  st->add_option("dataset", dir, "dataset directory")->required();
  st->add_option("--format", format, "text|csv");
  st->add_option("--literal-policy", policy, "keep|tag_by_type");

  std::string encoding, sim_out = "similarity.csv";
  auto* si = app.add_subcommand("similarity", "relation similarity matrix as CSV");
  si->add_option("dataset", dir, "dataset directory")->required();
  si->add_option("--encoding", encoding, "symmetric|agency|patient|transitivity|reverse_transitivity")->required();
  si->add_option("--out", sim_out, "output CSV");

  Common train, eval, sweep;
  auto* tr = app.add_subcommand("train", "fit a model and write factors, trace and manifest");
  add_common(tr, train);

  std::string factors, test_file;
  std::optional<double> threshold;
  auto* ev = app.add_subcommand("evaluate", "fact-prediction evaluation");
  add_common(ev, eval);
  ev->add_option("--factors", factors, "evaluate saved factors instead of training per repeat");
  ev->add_option("--threshold", threshold, "fixed decision threshold for saved factors");
  ev->add_option("--test-file", test_file, "test file (positives for weighted mode, labeled for external)");

  std::string fractions, models;
  auto* sw = app.add_subcommand("sweep", "density sweep over subject fractions");
  add_common(sw, sweep);
  sw->add_option("--fractions", fractions, "comma-separated fractions in (0, 1]");
  sw->add_option("--models", models, "comma-separated model kinds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*st) return cmd_stats(dir, format, policy);
    if (*si) return cmd_similarity(dir, encoding, sim_out);
    if (*tr) return cmd_train(train);
    if (*ev) return cmd_evaluate(eval, factors, threshold, test_file);
    if (*sw) return cmd_sweep(sweep, fractions, models);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
