#include "ketra/kernels.hpp"

#include <algorithm>
#include <bit>
#include <iterator>

#include <omp.h>

#include "ketra/error.hpp"

namespace ketra::kernels {

namespace {
int g_default_threads = 0;
}

void set_threads(int n) {
  if (n <= 0) {
    if (g_default_threads == 0) g_default_threads = omp_get_max_threads();
    omp_set_num_threads(g_default_threads);
  } else {
    if (g_default_threads == 0) g_default_threads = omp_get_max_threads();
    omp_set_num_threads(n);
  }
}

int threads() { return omp_get_max_threads(); }

EntitySets::EntitySets(const std::vector<std::vector<Index>>& sets, std::size_t universe)
    : n_sets_(sets.size()), words_((universe + 63) / 64), bits_(sets.size() * ((universe + 63) / 64), 0) {
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (Index e : sets[i]) {
      if (e >= universe) throw ValidationError("entity index outside the set universe");
      bits_[i * words_ + e / 64] |= std::uint64_t{1} << (e % 64);
    }
  }
}

std::size_t EntitySets::intersection(std::size_t a, const EntitySets& other, std::size_t b) const {
  std::size_t n = 0;
  const auto* x = bits_.data() + a * words_;
  const auto* y = other.bits_.data() + b * other.words_;
  for (std::size_t w = 0; w < words_; ++w) n += std::popcount(x[w] & y[w]);
  return n;
}

std::size_t EntitySets::union_size(std::size_t a, const EntitySets& other, std::size_t b) const {
  std::size_t n = 0;
  const auto* x = bits_.data() + a * words_;
  const auto* y = other.bits_.data() + b * other.words_;
  for (std::size_t w = 0; w < words_; ++w) n += std::popcount(x[w] | y[w]);
  return n;
}

Eigen::MatrixXd jaccard_matrix(const EntitySets& left, const EntitySets& right) {
  const auto n = static_cast<long>(left.count());
  const auto m = static_cast<long>(right.count());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, m);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < m; ++j) {
      const auto u = left.union_size(i, right, j);
      if (u == 0) continue;
      c(i, j) = static_cast<double>(left.intersection(i, right, j)) / static_cast<double>(u);
    }
  }
  return c;
}

Eigen::MatrixXd jaccard_matrix_serial(const std::vector<std::vector<Index>>& left,
                                      const std::vector<std::vector<Index>>& right) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<long>(left.size()), static_cast<long>(right.size()));
  std::vector<Index> tmp;
  for (std::size_t i = 0; i < left.size(); ++i) {
    for (std::size_t j = 0; j < right.size(); ++j) {
      tmp.clear();
      std::set_intersection(left[i].begin(), left[i].end(), right[j].begin(), right[j].end(),
                            std::back_inserter(tmp));
      const auto inter = tmp.size();
      const auto uni = left[i].size() + right[j].size() - inter;
      if (uni > 0) c(i, j) = static_cast<double>(inter) / static_cast<double>(uni);
    }
  }
  return c;
}

Eigen::MatrixXd slice_product_sum(const SparseTensor3& x, const Eigen::MatrixXd& b,
                                  const std::vector<Eigen::MatrixXd>& r, Side side) {
  const auto n = static_cast<long>(x.n_entities());
  const auto p = b.cols();
  const auto& inc = side == Side::subject ? x.by_subject() : x.by_object();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, p);
#pragma omp parallel
  {
    Eigen::VectorXd acc(p);
    Eigen::VectorXd row(p);
#pragma omp for schedule(dynamic, 16)
    for (long e = 0; e < n; ++e) {
      row.setZero();
      auto pos = inc.offsets[e];
      const auto end = inc.offsets[e + 1];
      // Rows are grouped by relation: sum the partner rows of B per relation,
      // then apply that relation's slice once.
      while (pos < end) {
        const auto k = inc.relation[pos];
        acc.setZero();
        while (pos < end && inc.relation[pos] == k) {
          acc += b.row(inc.other[pos]).transpose();
          ++pos;
        }
        if (side == Side::subject) {
          row.noalias() += r[k] * acc;
        } else {
          row.noalias() += r[k].transpose() * acc;
        }
      }
      out.row(e) = row.transpose();
    }
  }
  return out;
}

Eigen::MatrixXd slice_product_sum_serial(const SparseTensor3& x, const Eigen::MatrixXd& b,
                                         const std::vector<Eigen::MatrixXd>& r, Side side) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<long>(x.n_entities()), b.cols());
  for (std::size_t k = 0; k < x.n_relations(); ++k) {
    const auto& xk = x.slice_matrix(static_cast<Index>(k));
    if (side == Side::subject) {
      Eigen::MatrixXd xb = xk * b;
      out.noalias() += xb * r[k].transpose();
    } else {
      Eigen::MatrixXd xb = xk.transpose() * b;
      out.noalias() += xb * r[k];
    }
  }
  return out;
}

Eigen::MatrixXd sandwich_sum(const std::vector<Eigen::MatrixXd>& r, const Eigen::MatrixXd& g, bool transpose) {
  const auto p = g.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
  if (r.empty()) return out;
  // Column j of sum_k R_k G R_k^T is sum_k R_k (G R_k^T e_j).
#pragma omp parallel
  {
    Eigen::VectorXd v(p);
    Eigen::VectorXd col(p);
#pragma omp for schedule(static)
    for (long j = 0; j < p; ++j) {
      col.setZero();
      for (const auto& rk : r) {
        if (transpose) {
          v.noalias() = g * rk.col(j);
          col.noalias() += rk.transpose() * v;
        } else {
          v.noalias() = g * rk.row(j).transpose();
          col.noalias() += rk * v;
        }
      }
      out.col(j) = col;
    }
  }
  return out;
}

Eigen::MatrixXd sandwich_sum_serial(const std::vector<Eigen::MatrixXd>& r, const Eigen::MatrixXd& g, bool transpose) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.rows(), g.cols());
  for (const auto& rk : r) {
    if (transpose) {
      out += rk.transpose() * g * rk;
    } else {
      out += rk * g * rk.transpose();
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> projected_slices(const SparseTensor3& x, const Eigen::MatrixXd& left,
                                              const Eigen::MatrixXd& right) {
  const auto nr = static_cast<long>(x.n_relations());
  const auto p = left.cols();
  const auto q = right.cols();
  std::vector<Eigen::MatrixXd> out(x.n_relations(), Eigen::MatrixXd::Zero(p, q));
#pragma omp parallel
  {
    Eigen::VectorXd acc(q);
#pragma omp for schedule(dynamic)
    for (long k = 0; k < nr; ++k) {
      const auto entries = x.slice(static_cast<Index>(k));
      auto& bk = out[k];
      std::size_t pos = 0;
      // Entries of a slice are sorted by subject: B_k += l_s (sum_o m_o)^T.
      while (pos < entries.size()) {
        const auto s = entries[pos].s;
        acc.setZero();
        while (pos < entries.size() && entries[pos].s == s) {
          acc += right.row(entries[pos].o).transpose();
          ++pos;
        }
        bk.noalias() += left.row(s).transpose() * acc.transpose();
      }
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> projected_slices_serial(const SparseTensor3& x, const Eigen::MatrixXd& left,
                                                     const Eigen::MatrixXd& right) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(x.n_relations());
  for (std::size_t k = 0; k < x.n_relations(); ++k) {
    Eigen::MatrixXd xm = x.slice_matrix(static_cast<Index>(k)) * right;
    out.push_back(left.transpose() * xm);
  }
  return out;
}

double reconstruction_norm(const std::vector<Eigen::MatrixXd>& r, const Eigen::MatrixXd& g1,
                           const Eigen::MatrixXd& g2) {
  const auto nr = static_cast<long>(r.size());
  std::vector<double> per_slice(r.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < nr; ++k) {
    const Eigen::MatrixXd t = g1 * r[k] * g2;
    per_slice[k] = (r[k].array() * t.array()).sum();
  }
  double total = 0.0;
  for (double v : per_slice) total += v;
  return total;
}

double reconstruction_norm_serial(const std::vector<Eigen::MatrixXd>& r, const Eigen::MatrixXd& g1,
                                  const Eigen::MatrixXd& g2) {
  double total = 0.0;
  for (const auto& rk : r) total += (rk.transpose() * g1 * rk * g2).trace();
  return total;
}

std::vector<double> score_batch(const Eigen::MatrixXd& subj, const std::vector<Eigen::MatrixXd>& r,
                                const Eigen::MatrixXd& obj, std::span<const Triple> items) {
  const auto n = static_cast<long>(items.size());
  std::vector<double> out(items.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const auto& t = items[i];
    out[i] = subj.row(t.s).dot(r[t.r] * obj.row(t.o).transpose());
  }
  return out;
}

std::vector<double> score_batch_serial(const Eigen::MatrixXd& subj, const std::vector<Eigen::MatrixXd>& r,
                                       const Eigen::MatrixXd& obj, std::span<const Triple> items) {
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& t : items) {
    double s = 0.0;
    for (long a = 0; a < subj.cols(); ++a) {
      for (long b = 0; b < obj.cols(); ++b) s += subj(t.s, a) * r[t.r](a, b) * obj(t.o, b);
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace ketra::kernels
