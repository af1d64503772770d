#include "ketra/protocol.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ketra/error.hpp"
#include "ketra/seeds.hpp"

namespace ketra {

EvalMode parse_eval_mode(std::string_view name) {
  if (name == "uniform") return EvalMode::uniform;
  if (name == "weighted") return EvalMode::weighted;
  if (name == "external") return EvalMode::external;
  throw ValidationError("unknown eval mode '" + std::string(name) + "' (expected uniform|weighted|external)");
}

std::string_view to_string(EvalMode m) {
  switch (m) {
    case EvalMode::uniform: return "uniform";
    case EvalMode::weighted: return "weighted";
    case EvalMode::external: return "external";
  }
  return "?";
}

void ProtocolConfig::validate() const {
  hyper.validate();
  fit.validate();
  if (repeats < 1) throw ValidationError("repeats must be at least 1");
  if (mode == EvalMode::external && test_file.empty()) throw ValidationError("external mode needs a test file");
}

std::size_t default_per_slice(std::size_t n_entities) { return n_entities < 15000 ? 10 : 200; }

Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

namespace {

std::vector<Triple> read_positive_file(const std::filesystem::path& path, const KnowledgeGraph& kg) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  std::vector<Triple> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string s, r, o;
    if (!std::getline(ss, s, '\t') || !std::getline(ss, r, '\t') || !std::getline(ss, o, '\t')) {
      throw ParseError(path.string() + ":" + std::to_string(n) + ": expected 3 tab-separated fields");
    }
    const auto si = kg.entities.find(s);
    const auto ri = kg.relations.find(r);
    const auto oi = kg.entities.find(o);
    if (!si || !ri || !oi) throw ParseError(path.string() + ":" + std::to_string(n) + ": unknown label");
    out.push_back({*si, *ri, *oi});
  }
  if (out.empty()) throw ParseError(path.string() + ": no triples");
  return out;
}

}  // namespace

RepeatResult run_once(const Dataset& data, const ProtocolConfig& cfg, std::uint64_t seed) {
  const auto& kg = data.kg;
  const std::size_t per_slice = cfg.per_slice ? cfg.per_slice : default_per_slice(kg.n_entities());
  const TripleSet all = kg.triple_set();

  TestSplit test;
  switch (cfg.mode) {
    case EvalMode::uniform:
      test = make_test_set(kg, per_slice, sub_seed(seed, SeedStream::test_split));
      break;
    case EvalMode::weighted: {
      std::vector<Triple> pos;
      if (!cfg.test_file.empty()) {
        pos = read_positive_file(cfg.test_file, kg);
      } else {
        auto it = data.splits.find("test");
        if (it == data.splits.end() || it->second.empty()) {
          throw ValidationError("weighted mode needs a test split or a test file");
        }
        pos = it->second;
      }
      test = make_weighted_test_set(kg, pos, cfg.weighted, sub_seed(seed, SeedStream::weighted_split));
      break;
    }
    case EvalMode::external: {
      test.test = read_labeled_triples(cfg.test_file, kg);
      TripleSet masked;
      for (const auto& x : test.test.items) {
        if (x.label == 1) masked.insert(x.t);
      }
      std::vector<Triple> keep;
      for (const auto& t : kg.triples) {
        if (!masked.contains(t)) keep.push_back(t);
      }
      test.train = kg.with_triples(std::move(keep));
      break;
    }
  }

  TestSplit val = make_test_set(test.train, per_slice, sub_seed(seed, SeedStream::validation_split), &all);
  RepeatResult out;
  out.seed = seed;
  out.warnings = test.warnings;
  out.warnings.insert(out.warnings.end(), val.warnings.begin(), val.warnings.end());

  const SparseTensor3 x = build_tensor(val.train);
  std::optional<SimilarityMatrix> sim;
  if (uses_similarity(cfg.model)) sim = compute_similarity(x, cfg.encoding);
  const Eigen::MatrixXd* c = sim ? &sim->c() : nullptr;

  FitConfig fc = cfg.fit;
  fc.seed = seed;
  Hyperparams h = cfg.hyper;
  if (cfg.search) {
    h = hyper_search(cfg.model, x, c, h, default_grid(cfg.model), val.test, fc, cfg.search_metric).best;
  }
  auto res = fit(cfg.model, x, c, h, fc);
  const auto vscores = score_items(res.factors, val.test);
  const auto vlabels = val.test.labels();
  const double tau = tune_threshold(vscores, vlabels);
  out.validation_auc = auc(vscores, vlabels);
  out.report = classify_and_report(res.factors, test.test, tau);
  out.hyper = h;
  out.trace = std::move(res.trace);
  out.train_facts = val.train.triples.size();
  out.validation_items = val.test.items.size();
  return out;
}

ProtocolResult run_protocol(const Dataset& data, const ProtocolConfig& cfg) {
  cfg.validate();
  ProtocolResult r;
  std::vector<double> a, mi, ma;
  for (int i = 0; i < cfg.repeats; ++i) {
    r.repeats.push_back(run_once(data, cfg, cfg.seed + static_cast<std::uint64_t>(i)));
    const auto& rep = r.repeats.back().report;
    a.push_back(rep.auc);
    mi.push_back(rep.f1_micro);
    ma.push_back(rep.f1_macro);
  }
  r.auc = summarize(a);
  r.f1_micro = summarize(mi);
  r.f1_macro = summarize(ma);
  return r;
}

std::vector<DensityRow> density_sweep(const Dataset& data, const std::vector<double>& fractions,
                                      const std::vector<ModelKind>& models, const ProtocolConfig& cfg) {
  if (fractions.empty()) throw ValidationError("density sweep needs at least one fraction");
  if (models.empty()) throw ValidationError("density sweep needs at least one model");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ValidationError("fractions must lie in (0, 1]");
  }
  std::vector<DensityRow> rows;
  for (double f : fractions) {
    Dataset sub;
    sub.kg = subsample_subjects(data.kg, f, sub_seed(cfg.seed, SeedStream::subsample));
    DensityRow row;
    row.fraction = f;
    row.facts = sub.kg.triples.size();
    for (auto m : models) {
      ProtocolConfig pc = cfg;
      pc.model = m;
      pc.mode = EvalMode::uniform;
      row.models.push_back(m);
      row.auc.push_back(run_protocol(sub, pc).auc);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_density_csv(const std::vector<DensityRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "fraction,facts";
  if (!rows.empty()) {
    for (auto m : rows.front().models) out << ',' << to_string(m) << "_auc," << to_string(m) << "_auc_std";
  }
  out << '\n';
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6g,%zu", r.fraction, r.facts);
    out << buf;
    for (const auto& s : r.auc) {
      std::snprintf(buf, sizeof buf, ",%.6f,%.6f", s.mean, s.std);
      out << buf;
    }
    out << '\n';
  }
}

void write_protocol_csv(const ProtocolResult& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "metric,mean,std";
  for (const auto& rep : r.repeats) out << ",seed_" << rep.seed;
  out << '\n';
  char buf[64];
  auto row = [&](const char* name, const Summary& s, auto get) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f", name, s.mean, s.std);
    out << buf;
    for (const auto& rep : r.repeats) {
      std::snprintf(buf, sizeof buf, ",%.6f", get(rep.report));
      out << buf;
    }
    out << '\n';
  };
  row("auc", r.auc, [](const EvalReport& e) { return e.auc; });
  row("f1_micro", r.f1_micro, [](const EvalReport& e) { return e.f1_micro; });
  row("f1_macro", r.f1_macro, [](const EvalReport& e) { return e.f1_macro; });
}

}  // namespace ketra
