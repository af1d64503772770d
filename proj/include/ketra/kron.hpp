#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace ketra {

struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& m);

/// Solves ((G2 ⊗ G1) + alpha I) vec(R) = vec(rhs), i.e. G1 R G2 + alpha R = rhs,
/// through the eigendecompositions of G1 and G2. The p^2 x p^2 matrix is
/// never formed. Throws NumericalError when the system is singular.
Eigen::MatrixXd kron_ridge_solve(const Eigen::MatrixXd& g1, const Eigen::MatrixXd& g2, double alpha,
                                 const Eigen::MatrixXd& rhs);

struct CoupledSolveReport {
  std::size_t singular = 0;    // coefficients treated as zero (least-norm components)
  std::size_t indefinite = 0;  // negative coefficients: stationary point, not a minimum
  double min_coefficient = 0.0;
};

/// Solves every relation slice at once:
///
///   G1 R_k G2 + alpha R_k + sum_i L_ki R_i = B_k,   k = 0..K-1
///
/// with G1, G2 given by their eigendecompositions and L a symmetric K x K
/// coupling matrix (nullptr means L = 0). In the joint eigenbasis the
/// operator is diagonal with entries d1_a d2_b + alpha + sigma_m.
/// Coefficients with magnitude below 1e-12 of the largest are dropped, which
/// yields the least-norm solution of a singular system.
std::vector<Eigen::MatrixXd> solve_coupled_slices(const SymmetricEigen& g1, const SymmetricEigen& g2, double alpha,
                                                  const Eigen::MatrixXd* coupling,
                                                  const std::vector<Eigen::MatrixXd>& rhs,
                                                  CoupledSolveReport* report = nullptr);

/// Independent slices with their own ridge: G1 R_k G2 + alpha_k R_k = B_k.
std::vector<Eigen::MatrixXd> solve_independent_slices(const SymmetricEigen& g1, const SymmetricEigen& g2,
                                                      const std::vector<double>& alpha,
                                                      const std::vector<Eigen::MatrixXd>& rhs,
                                                      CoupledSolveReport* report = nullptr);

/// Dense Kronecker product, for tests and small diagnostics.
Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace ketra
