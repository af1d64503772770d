#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ketra/graph.hpp"

namespace ketra {

enum class ModelKind { rescal, nn_rescal, quad_reg, quad_constraint, linear_reg, linear_constraint };

enum class FactorKind { quadratic, linear };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);
FactorKind factor_kind(ModelKind kind);
bool uses_similarity(ModelKind kind);
bool is_constrained(ModelKind kind);

/// How the similarity term enters the relation update of the regularized
/// models. `derived` solves the exact stationarity condition of the
/// objective (all slices jointly); `literal` applies the per-slice diagonal
/// shift lambda_r + 1/rho + lambda_s * sum_i C_ki with no coupling term.
enum class CouplingMode { derived, literal };

CouplingMode parse_coupling_mode(std::string_view name);
std::string_view to_string(CouplingMode mode);

struct Hyperparams {
  int rank = 0;  // 0 selects p = N_r
  double lambda_A = 0.1;
  double lambda_r = 0.1;
  double lambda_e = 1.0;
  double lambda_s = 0.1;
  std::optional<double> lambda_a1;  // defaults to lambda_A
  std::optional<double> lambda_a2;  // defaults to lambda_A
  double rho = std::numeric_limits<double>::infinity();
  double lagrange_step = 1.0;

  double rho_inv() const { return rho == std::numeric_limits<double>::infinity() ? 0.0 : 1.0 / rho; }
  double a1() const { return lambda_a1.value_or(lambda_A); }
  double a2() const { return lambda_a2.value_or(lambda_A); }
  int resolved_rank(std::size_t n_relations) const {
    return rank > 0 ? rank : static_cast<int>(n_relations);
  }
  /// Throws ValidationError on negative coefficients, rho <= 0 or a step outside (0, 1].
  void validate() const;
};

/// Entity factors (A, or the pair A1/A2), relation slices R_k and, for the
/// constrained models, the multiplier matrix (zero diagonal).
struct FactorSet {
  FactorKind kind = FactorKind::quadratic;
  Eigen::MatrixXd a;   // quadratic
  Eigen::MatrixXd a1;  // linear, subject side
  Eigen::MatrixXd a2;  // linear, object side
  std::vector<Eigen::MatrixXd> r;
  std::optional<Eigen::MatrixXd> multipliers;

  const Eigen::MatrixXd& subject_factors() const { return kind == FactorKind::quadratic ? a : a1; }
  const Eigen::MatrixXd& object_factors() const { return kind == FactorKind::quadratic ? a : a2; }
  Eigen::Index rank() const { return subject_factors().cols(); }
  std::size_t n_entities() const { return static_cast<std::size_t>(subject_factors().rows()); }
  std::size_t n_relations() const { return r.size(); }
  bool all_finite() const;
};

/// Entries uniform on [0, 1) scaled by 1/sqrt(p); multipliers start at zero.
FactorSet init_factors(ModelKind kind, std::size_t n_entities, std::size_t n_relations, const Hyperparams& h,
                       std::uint64_t seed);

double score_triple(const FactorSet& f, Index s, Index r, Index o);

struct ObjectiveTerms {
  double f = 0.0;      // reconstruction
  double g = 0.0;      // Frobenius regularizers
  double f_s = 0.0;    // similarity regularizer
  double f_rho = 0.0;  // proximal term
  double f_lag = 0.0;  // multiplier term
  double total() const { return f + g + f_s + f_rho + f_lag; }
};

/// Objective of `kind` at `f`. `c` is required for the similarity-aware kinds.
///
///   f     = 1/2 sum_k ||X_k - A1 R_k A2^T||^2             (A1 = A2 = A for quadratic kinds)
///   g     = 1/2 (l_a1 ||A1||^2 + l_a2 ||A2||^2) + 1/2 l_e ||A1 - A2||^2 + 1/2 l_r sum_k ||R_k||^2
///           (quadratic: 1/2 l_A ||A||^2 + 1/2 l_r sum_k ||R_k||^2)
///   f_s   = 1/2 l_s sum_{k,i} C_ki ||R_k - R_i||^2           quad_reg, linear_reg
///   f_rho = (1/rho) (||A1||^2 + ||A2||^2 + sum_k ||R_k||^2)   linear_reg
///   f_lag = sum_{i != j} lambda_ij (||R_i - R_j||^2 - 1 + C_ij)   quad_constraint
///         = sum_{i != j} lambda_ij (1 - ||R_i - R_j||^2 + C_ij)   linear_constraint
ObjectiveTerms objective_value(ModelKind kind, const FactorSet& f, const SparseTensor3& x, const Eigen::MatrixXd* c,
                               const Hyperparams& h);

enum class Block { entity, entity_subject, entity_object, relation, multipliers };

std::string_view to_string(Block b);

struct SweepOptions {
  CouplingMode coupling = CouplingMode::derived;
  /// Called after every block update with the current factors.
  std::function<void(Block, const FactorSet&)> observer;
  /// Receives fallback notices (indefinite or singular relation systems).
  std::vector<std::string>* warnings = nullptr;
};

/// Standard RESCAL entity update
///   A <- [sum_k X_k A R_k^T + X_k^T A R_k] [sum_k R_k A^T A R_k^T + R_k^T A^T A R_k + lambda I]^{-1},
/// the exact minimizer of the half-step problem with the right-hand A held fixed.
Eigen::MatrixXd rescal_entity_update(const FactorSet& f, const SparseTensor3& x, double lambda);

/// Pairwise coupling weights of the relation step as a symmetric K x K
/// Laplacian-type matrix, or an empty matrix when there is none.
Eigen::MatrixXd relation_coupling(ModelKind kind, const FactorSet& f, const Eigen::MatrixXd* c, const Hyperparams& h,
                                  CouplingMode mode);

FactorSet rescal_sweep(FactorSet f, const SparseTensor3& x, const Hyperparams& h, const SweepOptions& opt = {});
FactorSet nnrescal_sweep(FactorSet f, const SparseTensor3& x, const Hyperparams& h, const SweepOptions& opt = {});
/// Quad+Regularized.
FactorSet quadreg_sweep(FactorSet f, const SparseTensor3& x, const Eigen::MatrixXd& c, const Hyperparams& h,
                        const SweepOptions& opt = {});
/// Linear+Regularized.
FactorSet model1_sweep(FactorSet f, const SparseTensor3& x, const Eigen::MatrixXd& c, const Hyperparams& h,
                       const SweepOptions& opt = {});
/// Quad+Constraint.
FactorSet model2_sweep(FactorSet f, const SparseTensor3& x, const Eigen::MatrixXd& c, const Hyperparams& h,
                       const SweepOptions& opt = {});
/// Linear+Constraint.
FactorSet model3_sweep(FactorSet f, const SparseTensor3& x, const Eigen::MatrixXd& c, const Hyperparams& h,
                       const SweepOptions& opt = {});

/// One block Gauss-Seidel sweep of `kind`: entity factors, relation slices, multipliers.
FactorSet sweep(ModelKind kind, FactorSet f, const SparseTensor3& x, const Eigen::MatrixXd* c, const Hyperparams& h,
                const SweepOptions& opt = {});

/// lambda_ij <- (1 - step) lambda_ij + step (||R_i - R_j||^2 + C_ij - 1) for i != j.
void update_multipliers(FactorSet& f, const Eigen::MatrixXd& c, double step);

/// (A1 + A2) / 2 with the same relation slices.
FactorSet merge_entity_factors(const FactorSet& f);

}  // namespace ketra
