#include "ketra/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "ketra/error.hpp"
#include "ketra/kernels.hpp"

namespace ketra {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::stratified_uniform: return "stratified_uniform";
    case Provenance::stratified_weighted: return "stratified_weighted";
    case Provenance::external_file: return "external_file";
  }
  return "?";
}

std::size_t LabeledTriples::positives() const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [](const LabeledTriple& x) { return x.label == 1; }));
}

std::vector<Triple> LabeledTriples::triples() const {
  std::vector<Triple> out;
  out.reserve(items.size());
  for (const auto& x : items) out.push_back(x.t);
  return out;
}

std::vector<int> LabeledTriples::labels() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& x : items) out.push_back(x.label);
  return out;
}

std::vector<Triple> corrupt_objects(const KnowledgeGraph& kg, std::span<const Triple> positives, std::size_t count,
                                    std::uint64_t seed, std::vector<std::string>* warnings,
                                    const TripleSet* forbidden) {
  std::vector<Triple> out;
  if (positives.empty() || count == 0) return out;
  if (kg.n_entities() == 0) throw ValidationError("corrupt_objects: empty entity dictionary");
  const TripleSet known = kg.triple_set();
  TripleSet taken(positives.begin(), positives.end());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick(0, static_cast<Index>(kg.n_entities() - 1));
  for (std::size_t i = 0; i < count; ++i) {
    const auto& base = positives[i % positives.size()];
    bool placed = false;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const Triple cand{base.s, base.r, pick(rng)};
      if (known.contains(cand) || taken.contains(cand) || (forbidden && forbidden->contains(cand))) continue;
      taken.insert(cand);
      out.push_back(cand);
      placed = true;
      break;
    }
    if (!placed) {
      if (warnings) {
        warnings->push_back("no negative found for (" + kg.entities.label(base.s) + ", " +
                            kg.relations.label(base.r) + ", ?) after 1000 draws; skipped");
      }
    }
  }
  return out;
}

TestSplit make_test_set(const KnowledgeGraph& kg, std::size_t per_slice, std::uint64_t seed,
                        const TripleSet* forbidden) {
  if (per_slice < 1) throw ValidationError("per_slice must be at least 1");
  TestSplit split;
  split.test.provenance = Provenance::stratified_uniform;
  std::vector<std::vector<Triple>> by_rel(kg.n_relations());
  for (const auto& t : kg.triples) by_rel[t.r].push_back(t);

  std::mt19937_64 rng(seed);
  const auto target_pos = static_cast<std::size_t>(std::llround(0.6 * static_cast<double>(per_slice)));
  std::vector<std::string> skipped;
  TripleSet masked;
  for (std::size_t k = 0; k < by_rel.size(); ++k) {
    auto& facts = by_rel[k];
    const auto& label = kg.relations.label(static_cast<Index>(k));
    if (facts.size() < 2) {
      skipped.push_back(label);
      split.warnings.push_back("relation " + label + " has " + std::to_string(facts.size()) +
                               " fact(s); no test items drawn");
      continue;
    }
    std::shuffle(facts.begin(), facts.end(), rng);
    std::size_t n_pos = std::max<std::size_t>(target_pos, 1);
    if (n_pos > facts.size() - 1) {
      split.warnings.push_back("relation " + label + " capped at " + std::to_string(facts.size() - 1) +
                               " positives");
      n_pos = facts.size() - 1;
    }
    const std::size_t n_neg = static_cast<std::size_t>(
        std::llround(static_cast<double>(n_pos) * static_cast<double>(per_slice - std::min(per_slice, target_pos)) /
                     static_cast<double>(std::max<std::size_t>(target_pos, 1))));
    const std::span<const Triple> pos(facts.data(), n_pos);
    for (const auto& t : pos) {
      split.test.items.push_back({t, 1});
      masked.insert(t);
    }
    for (const auto& t : corrupt_objects(kg, pos, n_neg, rng(), &split.warnings, forbidden)) {
      split.test.items.push_back({t, 0});
    }
  }
  if (skipped.size() == by_rel.size()) {
    std::string names;
    for (const auto& s : skipped) names += (names.empty() ? "" : ", ") + s;
    throw ValidationError("every relation is too small for a test split: " + names);
  }
  std::vector<Triple> keep;
  keep.reserve(kg.triples.size() - masked.size());
  for (const auto& t : kg.triples) {
    if (!masked.contains(t)) keep.push_back(t);
  }
  split.train = kg.with_triples(std::move(keep));
  return split;
}

WeightedMode parse_weighted_mode(std::string_view name) {
  if (name == "keep_all") return WeightedMode::keep_all;
  if (name == "split_60_40") return WeightedMode::split_60_40;
  throw ValidationError("unknown weighted mode '" + std::string(name) + "' (expected keep_all|split_60_40)");
}

TestSplit make_weighted_test_set(const KnowledgeGraph& kg, std::span<const Triple> positives, WeightedMode mode,
                                 std::uint64_t seed, const TripleSet* forbidden) {
  if (positives.empty()) throw ValidationError("weighted test set needs at least one positive");
  TestSplit split;
  split.test.provenance = Provenance::stratified_weighted;
  std::vector<Triple> pos(positives.begin(), positives.end());
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
  std::mt19937_64 rng(seed);

  std::vector<Triple> keep_pos, corrupt_from;
  if (mode == WeightedMode::keep_all) {
    keep_pos = pos;
    corrupt_from = pos;
    std::shuffle(corrupt_from.begin(), corrupt_from.end(), rng);
    corrupt_from.resize(static_cast<std::size_t>(std::llround(static_cast<double>(pos.size()) * 2.0 / 3.0)));
  } else {
    std::shuffle(pos.begin(), pos.end(), rng);
    const auto n_pos = static_cast<std::size_t>(std::llround(0.6 * static_cast<double>(pos.size())));
    keep_pos.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_pos));
    corrupt_from.assign(pos.begin() + static_cast<std::ptrdiff_t>(n_pos), pos.end());
  }
  // the full positive list is excluded from the negatives
  TripleSet avoid(pos.begin(), pos.end());
  if (forbidden) avoid.insert(forbidden->begin(), forbidden->end());
  for (const auto& t : keep_pos) split.test.items.push_back({t, 1});
  for (const auto& t : corrupt_objects(kg, corrupt_from, corrupt_from.size(), rng(), &split.warnings, &avoid)) {
    split.test.items.push_back({t, 0});
  }
  const TripleSet masked(keep_pos.begin(), keep_pos.end());
  std::vector<Triple> keep;
  for (const auto& t : kg.triples) {
    if (!masked.contains(t)) keep.push_back(t);
  }
  split.train = kg.with_triples(std::move(keep));
  return split;
}

namespace {

void check_binary(std::span<const double> scores, std::span<const int> labels, std::size_t& n_pos,
                  std::size_t& n_neg) {
  if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
  n_pos = n_neg = 0;
  for (int l : labels) {
    if (l == 1) {
      ++n_pos;
    } else if (l == 0) {
      ++n_neg;
    } else {
      throw ValidationError("labels must be 0 or 1");
    }
  }
  if (n_pos == 0 || n_neg == 0) throw ValidationError("both classes must be present");
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return idx;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t n_pos, n_neg;
  check_binary(scores, labels, n_pos, n_neg);
  for (double s : scores) {
    if (std::isnan(s)) throw NumericalError("auc: NaN score");
  }
  const auto idx = order_by_score(scores);
  // twice the Mann-Whitney U, accumulated over tie groups in integers
  std::uint64_t twice_u = 0;
  std::uint64_t neg_below = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::uint64_t gp = 0, gn = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? gp : gn) += 1;
      ++j;
    }
    twice_u += 2 * gp * neg_below + gp * gn;
    neg_below += gn;
    i = j;
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double Confusion::precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
double Confusion::recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
double Confusion::f1() const {
  const auto d = 2 * tp + fp + fn;
  return d == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(d);
}

double tune_threshold(std::span<const double> scores, std::span<const int> labels) {
  std::size_t n_pos, n_neg;
  check_binary(scores, labels, n_pos, n_neg);
  const auto idx = order_by_score(scores);
  // Walk from tau = +inf downwards; each distinct score crossed turns its items positive.
  const double inf = std::numeric_limits<double>::infinity();
  std::size_t tp = 0, fp = 0;
  auto f1 = [&] { return 2.0 * static_cast<double>(tp) / static_cast<double>(tp + fp + n_pos); };
  double best_tau = inf;
  double best = f1();
  for (std::size_t end = idx.size(); end > 0;) {
    const double v = scores[idx[end - 1]];
    std::size_t begin = end;
    while (begin > 0 && scores[idx[begin - 1]] == v) {
      (labels[idx[begin - 1]] == 1 ? tp : fp) += 1;
      --begin;
    }
    const double tau = begin == 0 ? -inf : 0.5 * scores[idx[begin - 1]] + 0.5 * v;
    const double cur = f1();
    if (cur > best) {
      best = cur;
      best_tau = tau;
    }
    end = begin;
  }
  return best_tau;
}

std::vector<double> score_items(const FactorSet& f, const LabeledTriples& test) {
  for (const auto& x : test.items) {
    if (x.t.s >= f.n_entities() || x.t.o >= f.n_entities() || x.t.r >= f.n_relations()) {
      throw ValidationError("test triple outside the factor dimensions");
    }
  }
  const auto items = test.triples();
  return kernels::score_batch(f.subject_factors(), f.r, f.object_factors(), items);
}

EvalReport report_from_scores(const LabeledTriples& test, std::vector<double> scores, double threshold) {
  if (scores.size() != test.items.size()) throw ValidationError("one score per test item required");
  EvalReport rep;
  rep.threshold = threshold;
  Confusion pooled;
  std::map<Index, Confusion> per;
  std::map<Index, std::size_t> support, positives;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& x = test.items[i];
    const bool pred = scores[i] > threshold;
    auto& c = per[x.t.r];
    auto bump = [&](Confusion& m) {
      if (pred && x.label == 1) ++m.tp;
      else if (pred) ++m.fp;
      else if (x.label == 1) ++m.fn;
      else ++m.tn;
    };
    bump(pooled);
    bump(c);
    ++support[x.t.r];
    if (x.label == 1) ++positives[x.t.r];
  }
  rep.f1_micro = pooled.f1();
  double macro = 0.0;
  for (const auto& [r, c] : per) {
    rep.per_relation.push_back({r, c.precision(), c.recall(), c.f1(), support[r], positives[r]});
    macro += c.f1();
  }
  rep.f1_macro = per.empty() ? 0.0 : macro / static_cast<double>(per.size());
  const auto labels = test.labels();
  const auto n_pos = test.positives();
  rep.auc = n_pos > 0 && n_pos < labels.size() ? auc(scores, labels) : std::numeric_limits<double>::quiet_NaN();
  rep.scores = std::move(scores);
  return rep;
}

EvalReport classify_and_report(const FactorSet& f, const LabeledTriples& test, double threshold) {
  return report_from_scores(test, score_items(f, test), threshold);
}

void write_labeled_triples(const LabeledTriples& t, const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const auto& x : t.items) {
    out << kg.entities.label(x.t.s) << '\t' << kg.relations.label(x.t.r) << '\t' << kg.entities.label(x.t.o) << '\t'
        << x.label << '\n';
  }
}

LabeledTriples read_labeled_triples(const std::filesystem::path& path, const KnowledgeGraph& kg) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  LabeledTriples out;
  out.provenance = Provenance::external_file;
  std::string line;
  std::size_t n = 0;
  auto where = [&] { return path.string() + ":" + std::to_string(n) + ": "; };
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != 4) throw ParseError(where() + "expected 4 tab-separated fields");
    const auto s = kg.entities.find(fields[0]);
    const auto r = kg.relations.find(fields[1]);
    const auto o = kg.entities.find(fields[2]);
    if (!s || !o) throw ParseError(where() + "unknown entity");
    if (!r) throw ParseError(where() + "unknown relation '" + fields[1] + "'");
    if (fields[3] != "0" && fields[3] != "1") throw ParseError(where() + "label must be 0 or 1");
    out.items.push_back({{*s, *r, *o}, fields[3] == "1" ? 1 : 0});
  }
  if (out.items.empty()) throw ParseError(path.string() + ": no labeled triples");
  return out;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_report_csv(const EvalReport& r, const Dictionary& relations, const std::filesystem::path& overall,
                      const std::filesystem::path& per_relation) {
  {
    std::ofstream out(overall);
    if (!out) throw ValidationError("cannot write " + overall.string());
    out << "auc,threshold,f1_micro,f1_macro,items\n"
        << num(r.auc) << ',' << num(r.threshold) << ',' << num(r.f1_micro) << ',' << num(r.f1_macro) << ','
        << r.scores.size() << '\n';
  }
  std::ofstream out(per_relation);
  if (!out) throw ValidationError("cannot write " + per_relation.string());
  out << "relation,precision,recall,f1,support,positives\n";
  for (const auto& m : r.per_relation) {
    out << relations.label(m.relation) << ',' << num(m.precision) << ',' << num(m.recall) << ',' << num(m.f1) << ','
        << m.support << ',' << m.positives << '\n';
  }
}

std::string format_report(const EvalReport& r, const Dictionary& relations) {
  std::ostringstream os;
  os << "items      " << r.scores.size() << "\n"
     << "auc        " << num(r.auc) << "\n"
     << "threshold  " << num(r.threshold) << "\n"
     << "f1 micro   " << num(r.f1_micro) << "\n"
     << "f1 macro   " << num(r.f1_macro) << "\n";
  for (const auto& m : r.per_relation) {
    os << "  " << relations.label(m.relation) << "  P=" << num(m.precision) << " R=" << num(m.recall)
       << " F1=" << num(m.f1) << " n=" << m.support << "\n";
  }
  return os.str();
}

}  // namespace ketra
