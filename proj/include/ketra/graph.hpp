#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/SparseCore>

namespace ketra {

using Index = std::uint32_t;

/// (subject, relation, object) by dictionary index.
struct Triple {
  Index s = 0;
  Index r = 0;
  Index o = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t h = (static_cast<std::uint64_t>(t.s) << 32) ^ t.o;
    h ^= static_cast<std::uint64_t>(t.r) * 0x9E3779B97F4A7C15ull;
    h ^= h >> 29;
    h *= 0xBF58476D1CE4E5B9ull;
    return static_cast<std::size_t>(h ^ (h >> 32));
  }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

/// Label <-> index map; indices are handed out in first-seen order.
class Dictionary {
 public:
  Index intern(std::string_view label);
  std::optional<Index> find(std::string_view label) const;
  const std::string& label(Index i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  friend bool operator==(const Dictionary& a, const Dictionary& b) { return a.labels_ == b.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, Index> index_;
};

struct KnowledgeGraph {
  Dictionary entities;
  Dictionary relations;
  std::vector<Triple> triples;

  std::size_t n_entities() const { return entities.size(); }
  std::size_t n_relations() const { return relations.size(); }
  TripleSet triple_set() const { return TripleSet(triples.begin(), triples.end()); }
  /// Same dictionaries, different triple list.
  KnowledgeGraph with_triples(std::vector<Triple> t) const;
};

enum class LiteralPolicy { keep, tag_by_type };

LiteralPolicy parse_literal_policy(std::string_view name);

/// Object-token rewrite applied under LiteralPolicy::tag_by_type.
std::string tag_literal(std::string_view token);

struct IngestReport {
  std::size_t lines = 0;
  std::size_t triples = 0;
  std::size_t duplicates = 0;
};

/// Parses subject<TAB>relation<TAB>object lines. Blank lines are skipped,
/// duplicates dropped and counted. Throws ParseError on a wrong field count
/// (with the line number) or when the file holds no triples.
KnowledgeGraph ingest_triples(const std::filesystem::path& path, LiteralPolicy policy = LiteralPolicy::keep,
                              IngestReport* report = nullptr);

/// Appends the triples of `path` to `kg`, sharing its dictionaries. `seen`
/// holds every triple already in kg. Returns the triples that were new.
std::vector<Triple> append_triples(KnowledgeGraph& kg, TripleSet& seen, const std::filesystem::path& path,
                                   LiteralPolicy policy, IngestReport& report);

void write_triples(const KnowledgeGraph& kg, const std::filesystem::path& path);

/// A dataset directory: optional entities.txt / relations.txt vocabularies
/// (one label per line, fixing index order and allowing empty slices),
/// then train/valid/test triple files (.tsv or .txt). Without named splits
/// every *.tsv file is read in lexicographic order.
struct Dataset {
  KnowledgeGraph kg;
  IngestReport report;
  std::map<std::string, std::vector<Triple>> splits;
  std::vector<std::filesystem::path> files;
};

Dataset load_dataset(const std::filesystem::path& dir, LiteralPolicy policy = LiteralPolicy::keep);

std::string format_ingest_report(const Dataset& d);

/// Binary N_e x N_e x N_r tensor in coordinate form. Entries are sorted by
/// (relation, subject, object); frontal slice k is a contiguous range.
class SparseTensor3 {
 public:
  using SliceMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

  /// Per-entity adjacency in compressed form: for row e, the (relation, other) pairs.
  struct Incidence {
    std::vector<std::size_t> offsets;  // size n_entities + 1
    std::vector<Index> relation;
    std::vector<Index> other;
  };

  SparseTensor3(std::size_t n_entities, std::size_t n_relations, std::vector<Triple> entries);

  std::size_t n_entities() const { return n_entities_; }
  std::size_t n_relations() const { return n_relations_; }
  std::size_t nnz() const { return entries_.size(); }

  std::span<const Triple> entries() const { return entries_; }
  std::span<const Triple> slice(Index k) const;
  const SliceMatrix& slice_matrix(Index k) const { return slices_.at(k); }

  /// Subject-major incidence: row i lists (k, j) with X_k(i, j) = 1.
  const Incidence& by_subject() const { return by_subject_; }
  /// Object-major incidence: row j lists (k, i) with X_k(i, j) = 1.
  const Incidence& by_object() const { return by_object_; }

 private:
  std::size_t n_entities_;
  std::size_t n_relations_;
  std::vector<Triple> entries_;
  std::vector<std::size_t> slice_offsets_;
  std::vector<SliceMatrix> slices_;
  Incidence by_subject_;
  Incidence by_object_;
};

SparseTensor3 build_tensor(const KnowledgeGraph& kg);

struct DatasetStats {
  std::size_t n_entities = 0;
  std::size_t n_relations = 0;
  std::size_t n_facts = 0;
  double avg_degree = 0.0;
  double graph_density = 0.0;
};

DatasetStats stats(const SparseTensor3& t);

/// Keeps the triples whose subject lies in a uniformly drawn subset of
/// ceil(fraction * |subjects|) subjects. Dictionaries are left untouched.
KnowledgeGraph subsample_subjects(const KnowledgeGraph& kg, double fraction, std::uint64_t seed);

}  // namespace ketra
