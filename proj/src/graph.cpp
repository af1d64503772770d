#include "ketra/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>

#include "ketra/error.hpp"

namespace ketra {

Index Dictionary::intern(std::string_view label) {
  auto it = index_.find(std::string(label));
  if (it != index_.end()) return it->second;
  const auto id = static_cast<Index>(labels_.size());
  labels_.emplace_back(label);
  index_.emplace(labels_.back(), id);
  return id;
}

std::optional<Index> Dictionary::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

KnowledgeGraph KnowledgeGraph::with_triples(std::vector<Triple> t) const {
  KnowledgeGraph out;
  out.entities = entities;
  out.relations = relations;
  out.triples = std::move(t);
  return out;
}

LiteralPolicy parse_literal_policy(std::string_view name) {
  if (name == "keep") return LiteralPolicy::keep;
  if (name == "tag_by_type") return LiteralPolicy::tag_by_type;
  throw ValidationError("unknown literal policy '" + std::string(name) + "' (expected keep|tag_by_type)");
}

std::string tag_literal(std::string_view token) {
  static const std::regex iso_date(R"(^[+-]?\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?$)");
  static const std::regex number(R"(^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$)");
  const std::string s(token);
  if (std::regex_match(s, iso_date)) return "date";
  if (std::regex_match(s, number)) return "number";
  return s;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::vector<std::string> read_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace

std::vector<Triple> append_triples(KnowledgeGraph& kg, TripleSet& seen, const std::filesystem::path& path,
                                   LiteralPolicy policy, IngestReport& report) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<Triple> added;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    ++report.lines;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    Triple t;
    t.s = kg.entities.intern(fields[0]);
    t.r = kg.relations.intern(fields[1]);
    t.o = policy == LiteralPolicy::tag_by_type ? kg.entities.intern(tag_literal(fields[2]))
                                               : kg.entities.intern(fields[2]);
    if (!seen.insert(t).second) {
      ++report.duplicates;
      continue;
    }
    kg.triples.push_back(t);
    added.push_back(t);
    ++report.triples;
  }
  return added;
}

KnowledgeGraph ingest_triples(const std::filesystem::path& path, LiteralPolicy policy, IngestReport* report) {
  KnowledgeGraph kg;
  TripleSet seen;
  IngestReport local;
  append_triples(kg, seen, path, policy, local);
  if (kg.triples.empty()) throw ParseError(path.string() + ": no triples found");
  if (report) *report = local;
  return kg;
}

void write_triples(const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const auto& t : kg.triples) {
    out << kg.entities.label(t.s) << '\t' << kg.relations.label(t.r) << '\t' << kg.entities.label(t.o) << '\n';
  }
}

Dataset load_dataset(const std::filesystem::path& dir, LiteralPolicy policy) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ParseError("dataset directory not found: " + dir.string());

  Dataset d;
  if (fs::exists(dir / "entities.txt")) {
    for (const auto& e : read_vocabulary(dir / "entities.txt")) d.kg.entities.intern(e);
  }
  if (fs::exists(dir / "relations.txt")) {
    for (const auto& r : read_vocabulary(dir / "relations.txt")) d.kg.relations.intern(r);
  }

  std::vector<std::pair<std::string, fs::path>> files;
  for (const char* split : {"train", "valid", "test"}) {
    for (const char* ext : {".tsv", ".txt"}) {
      const auto p = dir / (std::string(split) + ext);
      if (fs::exists(p)) {
        files.emplace_back(split, p);
        break;
      }
    }
  }
  if (files.empty()) {
    std::vector<fs::path> tsv;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".tsv") tsv.push_back(entry.path());
    }
    std::sort(tsv.begin(), tsv.end());
    for (const auto& p : tsv) files.emplace_back(p.stem().string(), p);
  }
  if (files.empty()) throw ParseError("no triple files in " + dir.string());

  TripleSet seen;
  for (const auto& [name, path] : files) {
    d.splits[name] = append_triples(d.kg, seen, path, policy, d.report);
    d.files.push_back(path);
  }
  if (d.kg.triples.empty()) throw ParseError("no triples found in " + dir.string());
  return d;
}

std::string format_ingest_report(const Dataset& d) {
  std::ostringstream os;
  os << "entities: " << d.kg.n_entities() << '\n'
     << "relations: " << d.kg.n_relations() << '\n'
     << "facts: " << d.kg.triples.size() << '\n'
     << "lines read: " << d.report.lines << '\n'
     << "duplicates dropped: " << d.report.duplicates << '\n';
  for (const auto& [name, triples] : d.splits) os << "split " << name << ": " << triples.size() << '\n';
  return os.str();
}

namespace {

SparseTensor3::Incidence build_incidence(std::size_t n, std::span<const Triple> entries, bool by_subject) {
  SparseTensor3::Incidence inc;
  inc.offsets.assign(n + 1, 0);
  for (const auto& t : entries) ++inc.offsets[(by_subject ? t.s : t.o) + 1];
  std::partial_sum(inc.offsets.begin(), inc.offsets.end(), inc.offsets.begin());
  inc.relation.resize(entries.size());
  inc.other.resize(entries.size());
  auto cursor = inc.offsets;
  // entries are sorted by (r, s, o), so each row ends up ordered by relation.
  for (const auto& t : entries) {
    const auto row = by_subject ? t.s : t.o;
    const auto pos = cursor[row]++;
    inc.relation[pos] = t.r;
    inc.other[pos] = by_subject ? t.o : t.s;
  }
  return inc;
}

}  // namespace

SparseTensor3::SparseTensor3(std::size_t n_entities, std::size_t n_relations, std::vector<Triple> entries)
    : n_entities_(n_entities), n_relations_(n_relations), entries_(std::move(entries)) {
  for (const auto& t : entries_) {
    if (t.s >= n_entities_ || t.o >= n_entities_ || t.r >= n_relations_) {
      throw ValidationError("tensor entry out of bounds");
    }
  }
  std::sort(entries_.begin(), entries_.end(),
            [](const Triple& a, const Triple& b) { return std::tie(a.r, a.s, a.o) < std::tie(b.r, b.s, b.o); });
  if (std::adjacent_find(entries_.begin(), entries_.end()) != entries_.end()) {
    throw ValidationError("duplicate tensor entries");
  }

  slice_offsets_.assign(n_relations_ + 1, 0);
  for (const auto& t : entries_) ++slice_offsets_[t.r + 1];
  std::partial_sum(slice_offsets_.begin(), slice_offsets_.end(), slice_offsets_.begin());

  slices_.reserve(n_relations_);
  const auto n = static_cast<std::int64_t>(n_entities_);
  for (std::size_t k = 0; k < n_relations_; ++k) {
    std::vector<Eigen::Triplet<double, std::int64_t>> coo;
    coo.reserve(slice_offsets_[k + 1] - slice_offsets_[k]);
    for (auto i = slice_offsets_[k]; i < slice_offsets_[k + 1]; ++i) {
      coo.emplace_back(entries_[i].s, entries_[i].o, 1.0);
    }
    SliceMatrix m(n, n);
    m.setFromTriplets(coo.begin(), coo.end());
    m.makeCompressed();
    slices_.push_back(std::move(m));
  }
  by_subject_ = build_incidence(n_entities_, entries_, true);
  by_object_ = build_incidence(n_entities_, entries_, false);
}

std::span<const Triple> SparseTensor3::slice(Index k) const {
  if (k >= n_relations_) throw ValidationError("relation index out of range");
  return std::span<const Triple>(entries_).subspan(slice_offsets_[k], slice_offsets_[k + 1] - slice_offsets_[k]);
}

SparseTensor3 build_tensor(const KnowledgeGraph& kg) {
  if (kg.n_entities() == 0 || kg.n_relations() == 0) throw ValidationError("cannot build a tensor from an empty graph");
  return SparseTensor3(kg.n_entities(), kg.n_relations(), kg.triples);
}

DatasetStats stats(const SparseTensor3& t) {
  DatasetStats s;
  s.n_entities = t.n_entities();
  s.n_relations = t.n_relations();
  s.n_facts = t.nnz();
  const auto ne = static_cast<double>(s.n_entities);
  s.avg_degree = static_cast<double>(s.n_facts) / ne;
  s.graph_density = static_cast<double>(s.n_facts) / (ne * ne);
  return s;
}

KnowledgeGraph subsample_subjects(const KnowledgeGraph& kg, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("subsample fraction must lie in (0, 1]");

  std::vector<Index> subjects;
  {
    std::vector<char> is_subject(kg.n_entities(), 0);
    for (const auto& t : kg.triples) is_subject[t.s] = 1;
    for (Index e = 0; e < is_subject.size(); ++e) {
      if (is_subject[e]) subjects.push_back(e);
    }
  }
  const auto n = subjects.size();
  // The epsilon keeps products such as 0.07 * 100 from rounding up past an integer.
  auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  keep = std::clamp<std::size_t>(keep, n == 0 ? 0 : 1, n);
  if (keep == n) return kg;

  std::mt19937_64 rng(seed);
  std::shuffle(subjects.begin(), subjects.end(), rng);
  std::vector<char> kept(kg.n_entities(), 0);
  for (std::size_t i = 0; i < keep; ++i) kept[subjects[i]] = 1;

  std::vector<Triple> out;
  for (const auto& t : kg.triples) {
    if (kept[t.s]) out.push_back(t);
  }
  return kg.with_triples(std::move(out));
}

}  // namespace ketra
