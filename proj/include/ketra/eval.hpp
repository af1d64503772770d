#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ketra/graph.hpp"
#include "ketra/models.hpp"

namespace ketra {

enum class Provenance { stratified_uniform, stratified_weighted, external_file };

std::string_view to_string(Provenance p);

struct LabeledTriple {
  Triple t;
  int label = 0;

  friend bool operator==(const LabeledTriple&, const LabeledTriple&) = default;
};

struct LabeledTriples {
  std::vector<LabeledTriple> items;
  Provenance provenance = Provenance::external_file;

  std::size_t positives() const;
  std::vector<Triple> triples() const;
  std::vector<int> labels() const;
};

struct TestSplit {
  LabeledTriples test;
  KnowledgeGraph train;  // input kg with the test positives removed
  std::vector<std::string> warnings;
};

/// Negatives for `positives`: item i keeps the (s, r) of positives[i mod n]
/// and draws a uniform object. Draws landing in `kg`, `forbidden`, the
/// positives or an earlier negative are rejected; after 1000 rejections the
/// item is skipped and a warning is appended.
std::vector<Triple> corrupt_objects(const KnowledgeGraph& kg, std::span<const Triple> positives, std::size_t count,
                                    std::uint64_t seed, std::vector<std::string>* warnings = nullptr,
                                    const TripleSet* forbidden = nullptr);

/// Stratified-uniform split: per relation, round(0.6 * per_slice) positives
/// (at most |slice| - 1 so the slice keeps a training fact) drawn without
/// replacement and per_slice - positives corrupted negatives. Slices with
/// fewer than two facts are skipped with a warning; if every slice is
/// skipped a ValidationError lists them.
TestSplit make_test_set(const KnowledgeGraph& kg, std::size_t per_slice, std::uint64_t seed,
                        const TripleSet* forbidden = nullptr);

enum class WeightedMode {
  keep_all,     // every given positive, plus negatives up to a 60/40 ratio
  split_60_40,  // 60% of the given positives; the other 40% are corrupted into negatives
};

WeightedMode parse_weighted_mode(std::string_view name);

/// Stratified-weighted split from an external list of positives. The
/// positives are masked from `kg`.
TestSplit make_weighted_test_set(const KnowledgeGraph& kg, std::span<const Triple> positives, WeightedMode mode,
                                 std::uint64_t seed, const TripleSet* forbidden = nullptr);

/// Probability that a random positive outscores a random negative, ties
/// counted 1/2. Throws ValidationError unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Threshold maximizing pooled F1 of the rule score > tau over the midpoints
/// between consecutive distinct scores and the two infinite sentinels.
/// Ties go to the larger threshold.
double tune_threshold(std::span<const double> scores, std::span<const int> labels);

struct RelationMetrics {
  Index relation = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // test items of this relation
  std::size_t positives = 0;
};

struct EvalReport {
  double auc = 0.0;  // NaN when the test set has a single class
  double threshold = 0.0;
  double f1_micro = 0.0;
  double f1_macro = 0.0;
  std::vector<RelationMetrics> per_relation;  // relations with support > 0, by index
  std::vector<double> scores;
};

std::vector<double> score_items(const FactorSet& f, const LabeledTriples& test);

/// Precision/recall/F1 with the 0/0 = 0 convention.
struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision() const;
  double recall() const;
  double f1() const;
};

EvalReport report_from_scores(const LabeledTriples& test, std::vector<double> scores, double threshold);
EvalReport classify_and_report(const FactorSet& f, const LabeledTriples& test, double threshold);

void write_labeled_triples(const LabeledTriples& t, const KnowledgeGraph& kg, const std::filesystem::path& path);
/// Reads subject<TAB>relation<TAB>object<TAB>label against kg's dictionaries.
/// Unknown labels are a ParseError.
LabeledTriples read_labeled_triples(const std::filesystem::path& path, const KnowledgeGraph& kg);

void write_report_csv(const EvalReport& r, const Dictionary& relations, const std::filesystem::path& overall,
                      const std::filesystem::path& per_relation);
std::string format_report(const EvalReport& r, const Dictionary& relations);

}  // namespace ketra
