#include "ketra/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ketra/error.hpp"
#include "ketra/kernels.hpp"

namespace ketra {

RelationProfile relation_profile(const SparseTensor3& t, Index k) {
  if (k >= t.n_relations()) throw ValidationError("relation index out of range");
  RelationProfile p;
  for (const auto& e : t.slice(k)) {
    p.subjects.push_back(e.s);
    p.objects.push_back(e.o);
  }
  for (auto* v : {&p.subjects, &p.objects}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  return p;
}

Encoding parse_encoding(std::string_view name) {
  if (name == "symmetric") return Encoding::symmetric;
  if (name == "agency") return Encoding::agency;
  if (name == "patient") return Encoding::patient;
  if (name == "transitivity") return Encoding::transitivity;
  if (name == "reverse_transitivity") return Encoding::reverse_transitivity;
  throw ValidationError("unknown similarity encoding '" + std::string(name) +
                        "' (expected symmetric|agency|patient|transitivity|reverse_transitivity)");
}

std::string_view to_string(Encoding e) {
  switch (e) {
    case Encoding::symmetric: return "symmetric";
    case Encoding::agency: return "agency";
    case Encoding::patient: return "patient";
    case Encoding::transitivity: return "transitivity";
    case Encoding::reverse_transitivity: return "reverse_transitivity";
  }
  return "?";
}

const Eigen::MatrixXd& SimilarityMatrix::laplacian_sqrt() const {
  if (!sqrt_) sqrt_ = ketra::laplacian_sqrt(c_);
  return *sqrt_;
}

SimilarityMatrix compute_similarity(const SparseTensor3& t, Encoding encoding) {
  const auto nr = t.n_relations();
  if (nr == 0) throw ValidationError("similarity needs at least one relation");
  std::vector<std::vector<Index>> subjects(nr), objects(nr), both(nr);
  for (Index k = 0; k < nr; ++k) {
    auto p = relation_profile(t, k);
    std::set_union(p.subjects.begin(), p.subjects.end(), p.objects.begin(), p.objects.end(),
                   std::back_inserter(both[k]));
    subjects[k] = std::move(p.subjects);
    objects[k] = std::move(p.objects);
  }
  const auto ne = t.n_entities();
  auto sets = [&](const std::vector<std::vector<Index>>& v) { return kernels::EntitySets(v, ne); };
  Eigen::MatrixXd c;
  switch (encoding) {
    case Encoding::symmetric: {
      const auto e = sets(both);
      c = kernels::jaccard_matrix(e, e);
      break;
    }
    case Encoding::agency: {
      const auto s = sets(subjects);
      c = kernels::jaccard_matrix(s, s);
      break;
    }
    case Encoding::patient: {
      const auto o = sets(objects);
      c = kernels::jaccard_matrix(o, o);
      break;
    }
    case Encoding::transitivity:
      c = kernels::jaccard_matrix(sets(subjects), sets(objects));
      break;
    case Encoding::reverse_transitivity:
      c = kernels::jaccard_matrix(sets(objects), sets(subjects));
      break;
  }
  return SimilarityMatrix(std::move(c), encoding);
}

Eigen::MatrixXd similarity_laplacian(const Eigen::MatrixXd& c) {
  if (c.rows() != c.cols()) throw ValidationError("similarity matrix must be square");
  const Eigen::MatrixXd w = 0.5 * (c + c.transpose());
  Eigen::MatrixXd l = -w;
  l.diagonal() += w.rowwise().sum();
  return l;
}

Eigen::MatrixXd laplacian_sqrt(const Eigen::MatrixXd& c) {
  const Eigen::MatrixXd l = similarity_laplacian(c);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(l);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of the similarity Laplacian failed");
  Eigen::VectorXd d = eig.eigenvalues();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) < -1e-8) throw NumericalError("similarity Laplacian has a negative eigenvalue");
    d(i) = std::sqrt(std::max(d(i), 0.0));
  }
  const auto& v = eig.eigenvectors();
  return v * d.asDiagonal() * v.transpose();
}

namespace {

void check_stack(const std::vector<Eigen::MatrixXd>& slices, const Eigen::MatrixXd& c) {
  if (c.rows() != c.cols() || static_cast<std::size_t>(c.rows()) != slices.size()) {
    throw ValidationError("similarity matrix does not match the number of slices");
  }
  for (const auto& s : slices) {
    if (s.rows() != slices.front().rows() || s.cols() != slices.front().cols()) {
      throw ValidationError("relation slices differ in shape");
    }
  }
}

}  // namespace

double weighted_slice_distance(const std::vector<Eigen::MatrixXd>& slices, const Eigen::MatrixXd& c) {
  check_stack(slices, c);
  double total = 0.0;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    for (std::size_t j = 0; j < slices.size(); ++j) {
      if (i == j) continue;
      total += c(i, j) * (slices[i] - slices[j]).squaredNorm();
    }
  }
  return total;
}

double weighted_slice_distance_laplacian(const std::vector<Eigen::MatrixXd>& slices, const Eigen::MatrixXd& c) {
  check_stack(slices, c);
  if (slices.empty()) return 0.0;
  const Eigen::MatrixXd s = laplacian_sqrt(c);
  double total = 0.0;
  // (R x_3 S)_k = sum_i S_ki R_i
  for (std::size_t k = 0; k < slices.size(); ++k) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(slices[0].rows(), slices[0].cols());
    for (std::size_t i = 0; i < slices.size(); ++i) y += s(k, i) * slices[i];
    total += y.squaredNorm();
  }
  return 2.0 * total;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace

void write_similarity_csv(const SimilarityMatrix& s, const Dictionary& relations, const std::filesystem::path& path) {
  if (static_cast<std::size_t>(s.size()) != relations.size()) {
    throw ValidationError("relation dictionary does not match the similarity matrix");
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const auto& label : relations.labels()) out << ',' << csv_field(label);
  out << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    out << csv_field(relations.label(static_cast<Index>(i)));
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.6f", s.c()(i, j));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace ketra
