#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ketra/graph.hpp"

namespace ketra {

/// Subject and object sets of one frontal slice, as sorted index lists.
struct RelationProfile {
  std::vector<Index> subjects;
  std::vector<Index> objects;
};

RelationProfile relation_profile(const SparseTensor3& t, Index k);

enum class Encoding { symmetric, agency, patient, transitivity, reverse_transitivity };

Encoding parse_encoding(std::string_view name);
std::string_view to_string(Encoding e);

/// Jaccard overlap of relation slices under one encoding. Entries lie in
/// [0, 1]; an empty union gives 0.
class SimilarityMatrix {
 public:
  SimilarityMatrix(Eigen::MatrixXd c, Encoding encoding) : c_(std::move(c)), encoding_(encoding) {}

  const Eigen::MatrixXd& c() const { return c_; }
  Encoding encoding() const { return encoding_; }
  Eigen::Index size() const { return c_.rows(); }

  /// (deg(W) - W)^{1/2} for W = (C + C^T) / 2; computed on first use.
  const Eigen::MatrixXd& laplacian_sqrt() const;

 private:
  Eigen::MatrixXd c_;
  Encoding encoding_;
  mutable std::optional<Eigen::MatrixXd> sqrt_;
};

SimilarityMatrix compute_similarity(const SparseTensor3& t, Encoding encoding);

/// deg(W) - W with W = (C + C^T) / 2 and deg the diagonal of row sums.
Eigen::MatrixXd similarity_laplacian(const Eigen::MatrixXd& c);

/// Symmetric PSD square root of the similarity Laplacian. Eigenvalues in
/// [-1e-8, 0) are clamped to zero; anything below throws NumericalError.
Eigen::MatrixXd laplacian_sqrt(const Eigen::MatrixXd& c);

/// sum_{ij} C_ij ||R_i - R_j||_F^2 by direct pairwise summation.
double weighted_slice_distance(const std::vector<Eigen::MatrixXd>& slices, const Eigen::MatrixXd& c);

/// The same quantity through the mode-3 product with S = laplacian_sqrt(C):
/// 2 ||R x_3 S||_F^2. The factor 2 comes from sum_ij w_ij (x_i - x_j)^2 = 2 x^T L x.
double weighted_slice_distance_laplacian(const std::vector<Eigen::MatrixXd>& slices, const Eigen::MatrixXd& c);

/// Header row of relation labels (leading empty cell), then one row per
/// relation: label followed by N_r values with 6 fractional digits.
void write_similarity_csv(const SimilarityMatrix& s, const Dictionary& relations, const std::filesystem::path& path);

}  // namespace ketra
