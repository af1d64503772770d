#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version, used by the
// solvers, and a `_serial` reference built from plain sparse/dense algebra
// that the tests and the benchmark compare against.
//
// Every parallel kernel assigns each output element to exactly one thread
// and accumulates it in a fixed order, so results are bit-identical for any
// thread count.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ketra/graph.hpp"

namespace ketra::kernels {

/// Fixed-width bitsets, one per set, for overlap counting.
class EntitySets {
 public:
  EntitySets(const std::vector<std::vector<Index>>& sets, std::size_t universe);

  std::size_t count() const { return n_sets_; }
  std::size_t intersection(std::size_t a, const EntitySets& other, std::size_t b) const;
  std::size_t union_size(std::size_t a, const EntitySets& other, std::size_t b) const;

 private:
  std::size_t n_sets_;
  std::size_t words_;
  std::vector<std::uint64_t> bits_;
};

/// J_ij = |left_i ∩ right_j| / |left_i ∪ right_j|, 0 when the union is empty.
Eigen::MatrixXd jaccard_matrix(const EntitySets& left, const EntitySets& right);
Eigen::MatrixXd jaccard_matrix_serial(const std::vector<std::vector<Index>>& left,
                                      const std::vector<std::vector<Index>>& right);

enum class Side { subject, object };

/// Side::subject: sum_k X_k B R_k^T.  Side::object: sum_k X_k^T B R_k.
Eigen::MatrixXd slice_product_sum(const SparseTensor3& x, const Eigen::MatrixXd& b,
                                  const std::vector<Eigen::MatrixXd>& r, Side side);
Eigen::MatrixXd slice_product_sum_serial(const SparseTensor3& x, const Eigen::MatrixXd& b,
                                         const std::vector<Eigen::MatrixXd>& r, Side side);

/// sum_k R_k G R_k^T, or sum_k R_k^T G R_k when `transpose` is set.
Eigen::MatrixXd sandwich_sum(const std::vector<Eigen::MatrixXd>& r, const Eigen::MatrixXd& g, bool transpose);
Eigen::MatrixXd sandwich_sum_serial(const std::vector<Eigen::MatrixXd>& r, const Eigen::MatrixXd& g, bool transpose);

/// B_k = L^T X_k M for every slice k.
std::vector<Eigen::MatrixXd> projected_slices(const SparseTensor3& x, const Eigen::MatrixXd& left,
                                              const Eigen::MatrixXd& right);
std::vector<Eigen::MatrixXd> projected_slices_serial(const SparseTensor3& x, const Eigen::MatrixXd& left,
                                                     const Eigen::MatrixXd& right);

/// sum_k tr(R_k^T G1 R_k G2), i.e. sum_k ||A1 R_k A2^T||_F^2 with G_i = A_i^T A_i.
double reconstruction_norm(const std::vector<Eigen::MatrixXd>& r, const Eigen::MatrixXd& g1,
                           const Eigen::MatrixXd& g2);
double reconstruction_norm_serial(const std::vector<Eigen::MatrixXd>& r, const Eigen::MatrixXd& g1,
                                  const Eigen::MatrixXd& g2);

/// subj.row(s) * R_r * obj.row(o)^T for each triple.
std::vector<double> score_batch(const Eigen::MatrixXd& subj, const std::vector<Eigen::MatrixXd>& r,
                                const Eigen::MatrixXd& obj, std::span<const Triple> items);
std::vector<double> score_batch_serial(const Eigen::MatrixXd& subj, const std::vector<Eigen::MatrixXd>& r,
                                       const Eigen::MatrixXd& obj, std::span<const Triple> items);

/// Worker count used by the parallel kernels (0 restores the OpenMP default).
void set_threads(int n);
int threads();

}  // namespace ketra::kernels
