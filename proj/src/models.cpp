#include "ketra/models.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "ketra/error.hpp"
#include "ketra/kernels.hpp"
#include "ketra/kron.hpp"
#include "ketra/similarity.hpp"

namespace ketra {

ModelKind parse_model_kind(std::string_view name) {
  if (name == "rescal") return ModelKind::rescal;
  if (name == "nn_rescal") return ModelKind::nn_rescal;
  if (name == "quad_reg") return ModelKind::quad_reg;
  if (name == "quad_constraint") return ModelKind::quad_constraint;
  if (name == "linear_reg") return ModelKind::linear_reg;
  if (name == "linear_constraint") return ModelKind::linear_constraint;
  throw ValidationError("unknown model '" + std::string(name) +
                        "' (expected rescal|nn_rescal|quad_reg|quad_constraint|linear_reg|linear_constraint)");
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::rescal: return "rescal";
    case ModelKind::nn_rescal: return "nn_rescal";
    case ModelKind::quad_reg: return "quad_reg";
    case ModelKind::quad_constraint: return "quad_constraint";
    case ModelKind::linear_reg: return "linear_reg";
    case ModelKind::linear_constraint: return "linear_constraint";
  }
  return "?";
}

FactorKind factor_kind(ModelKind kind) {
  return kind == ModelKind::linear_reg || kind == ModelKind::linear_constraint ? FactorKind::linear
                                                                               : FactorKind::quadratic;
}

bool uses_similarity(ModelKind kind) {
  return kind == ModelKind::quad_reg || kind == ModelKind::linear_reg || is_constrained(kind);
}

bool is_constrained(ModelKind kind) {
  return kind == ModelKind::quad_constraint || kind == ModelKind::linear_constraint;
}

CouplingMode parse_coupling_mode(std::string_view name) {
  if (name == "derived") return CouplingMode::derived;
  if (name == "literal") return CouplingMode::literal;
  throw ValidationError("unknown coupling mode '" + std::string(name) + "' (expected derived|literal)");
}

std::string_view to_string(CouplingMode mode) { return mode == CouplingMode::derived ? "derived" : "literal"; }

std::string_view to_string(Block b) {
  switch (b) {
    case Block::entity: return "A";
    case Block::entity_subject: return "A1";
    case Block::entity_object: return "A2";
    case Block::relation: return "R";
    case Block::multipliers: return "lambda";
  }
  return "?";
}

void Hyperparams::validate() const {
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(std::string(name) + " must be finite and >= 0");
  };
  if (rank < 0) throw ValidationError("rank must be positive (0 selects the number of relations)");
  nonneg(lambda_A, "lambda_A");
  nonneg(lambda_r, "lambda_r");
  nonneg(lambda_e, "lambda_e");
  nonneg(lambda_s, "lambda_s");
  nonneg(a1(), "lambda_a1");
  nonneg(a2(), "lambda_a2");
  if (!(rho > 0.0)) throw ValidationError("rho must be positive (inf disables the proximal term)");
  if (!(lagrange_step > 0.0 && lagrange_step <= 1.0)) throw ValidationError("lagrange_step must lie in (0, 1]");
}

bool FactorSet::all_finite() const {
  auto ok = [](const Eigen::MatrixXd& m) { return m.allFinite(); };
  if (!ok(a) || !ok(a1) || !ok(a2)) return false;
  for (const auto& rk : r) {
    if (!ok(rk)) return false;
  }
  return !multipliers || ok(*multipliers);
}

FactorSet init_factors(ModelKind kind, std::size_t n_entities, std::size_t n_relations, const Hyperparams& h,
                       std::uint64_t seed) {
  if (n_entities == 0 || n_relations == 0) throw ValidationError("init_factors: dimensions must be positive");
  const auto p = h.resolved_rank(n_relations);
  if (p < 1) throw ValidationError("rank must be at least 1");
  const double scale = 1.0 / std::sqrt(static_cast<double>(p));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = unif(rng) * scale;
    }
    return m;
  };

  FactorSet f;
  f.kind = factor_kind(kind);
  const auto ne = static_cast<Eigen::Index>(n_entities);
  if (f.kind == FactorKind::quadratic) {
    f.a = draw(ne, p);
  } else {
    f.a1 = draw(ne, p);
    f.a2 = draw(ne, p);
  }
  f.r.reserve(n_relations);
  for (std::size_t k = 0; k < n_relations; ++k) f.r.push_back(draw(p, p));
  if (is_constrained(kind)) {
    f.multipliers = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_relations), static_cast<Eigen::Index>(n_relations));
  }
  return f;
}

double score_triple(const FactorSet& f, Index s, Index r, Index o) {
  if (s >= f.n_entities() || o >= f.n_entities() || r >= f.n_relations()) {
    throw ValidationError("score_triple: index out of range");
  }
  return f.subject_factors().row(s).dot(f.r[r] * f.object_factors().row(o).transpose());
}

namespace {

void check_shapes(const FactorSet& f, const SparseTensor3& x, const Eigen::MatrixXd* c, bool need_c) {
  if (f.n_entities() != x.n_entities() || f.n_relations() != x.n_relations()) {
    throw ValidationError("factor set does not match the tensor dimensions");
  }
  if (f.kind == FactorKind::linear && (f.a1.rows() != f.a2.rows() || f.a1.cols() != f.a2.cols())) {
    throw ValidationError("A1 and A2 differ in shape");
  }
  for (const auto& rk : f.r) {
    if (rk.rows() != f.rank() || rk.cols() != f.rank()) throw ValidationError("relation slice is not p x p");
  }
  if (need_c) {
    if (!c) throw ValidationError("this model needs a similarity matrix");
    if (c->rows() != c->cols() || static_cast<std::size_t>(c->rows()) != x.n_relations()) {
      throw ValidationError("similarity matrix does not match the number of relations");
    }
  }
}

double sum_sq(const std::vector<Eigen::MatrixXd>& r) {
  double s = 0.0;
  for (const auto& rk : r) s += rk.squaredNorm();
  return s;
}

// N D^{-1} for symmetric D.
Eigen::MatrixXd right_solve_symmetric(const Eigen::MatrixXd& n, const Eigen::MatrixXd& d) {
  Eigen::LLT<Eigen::MatrixXd> llt(d);
  if (llt.info() == Eigen::Success) return llt.solve(n.transpose()).transpose();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(d);
  return cod.solve(n.transpose()).transpose();
}

void note(const SweepOptions& opt, std::string msg) {
  if (opt.warnings) opt.warnings->push_back(std::move(msg));
}

void notify(const SweepOptions& opt, Block b, const FactorSet& f) {
  if (opt.observer) opt.observer(b, f);
}

void project_nonnegative(Eigen::MatrixXd& m) { m = m.cwiseMax(0.0); }

}  // namespace

ObjectiveTerms objective_value(ModelKind kind, const FactorSet& f, const SparseTensor3& x, const Eigen::MatrixXd* c,
                               const Hyperparams& h) {
  check_shapes(f, x, c, uses_similarity(kind));
  if (factor_kind(kind) != f.kind) throw ValidationError("factor kind does not match the model");
  ObjectiveTerms t;
  const auto& left = f.subject_factors();
  const auto& right = f.object_factors();
  const Eigen::MatrixXd g1 = left.transpose() * left;
  const Eigen::MatrixXd g2 = right.transpose() * right;
  const auto b = kernels::projected_slices(x, left, right);
  double cross = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) cross += (b[k].array() * f.r[k].array()).sum();
  t.f = 0.5 * (static_cast<double>(x.nnz()) - 2.0 * cross + kernels::reconstruction_norm(f.r, g1, g2));

  const double rnorm = sum_sq(f.r);
  if (f.kind == FactorKind::quadratic) {
    t.g = 0.5 * h.lambda_A * f.a.squaredNorm() + 0.5 * h.lambda_r * rnorm;
  } else {
    t.g = 0.5 * (h.a1() * f.a1.squaredNorm() + h.a2() * f.a2.squaredNorm()) +
          0.5 * h.lambda_e * (f.a1 - f.a2).squaredNorm() + 0.5 * h.lambda_r * rnorm;
  }
  if ((kind == ModelKind::quad_reg || kind == ModelKind::linear_reg) && h.lambda_s != 0.0) {
    t.f_s = 0.5 * h.lambda_s * weighted_slice_distance(f.r, *c);
  }
  if (kind == ModelKind::linear_reg) {
    t.f_rho = h.rho_inv() * (f.a1.squaredNorm() + f.a2.squaredNorm() + rnorm);
  }
  if (is_constrained(kind)) {
    if (!f.multipliers) throw ValidationError("constrained model without multipliers");
    const auto& lam = *f.multipliers;
    const double sign = kind == ModelKind::quad_constraint ? 1.0 : -1.0;
    double s = 0.0;
    for (std::size_t i = 0; i < f.r.size(); ++i) {
      for (std::size_t j = 0; j < f.r.size(); ++j) {
        if (i == j || lam(i, j) == 0.0) continue;
        const double d = (f.r[i] - f.r[j]).squaredNorm();
        s += lam(i, j) * (sign * (d - 1.0) + (*c)(i, j));
      }
    }
    t.f_lag = s;
  }
  return t;
}

Eigen::MatrixXd rescal_entity_update(const FactorSet& f, const SparseTensor3& x, double lambda) {
  const auto& a = f.a;
  const Eigen::MatrixXd g = a.transpose() * a;
  Eigen::MatrixXd n = kernels::slice_product_sum(x, a, f.r, kernels::Side::subject);
  n += kernels::slice_product_sum(x, a, f.r, kernels::Side::object);
  Eigen::MatrixXd d = kernels::sandwich_sum(f.r, g, false) + kernels::sandwich_sum(f.r, g, true);
  d.diagonal().array() += lambda;
  return right_solve_symmetric(n, d);
}

Eigen::MatrixXd relation_coupling(ModelKind kind, const FactorSet& f, const Eigen::MatrixXd* c, const Hyperparams& h,
                                  CouplingMode mode) {
  switch (kind) {
    case ModelKind::quad_reg:
    case ModelKind::linear_reg:
      // d/dR_k of 1/2 l_s sum_{k,i} C_ki ||R_k - R_i||^2 = 2 l_s (L R)_k, L the Laplacian of (C + C^T)/2.
      if (mode == CouplingMode::literal || h.lambda_s == 0.0) return {};
      return 2.0 * h.lambda_s * similarity_laplacian(*c);
    case ModelKind::quad_constraint:
    case ModelKind::linear_constraint: {
      // sum_{i != j} lambda_ij ||R_i - R_j||^2 contributes 4 (L_lambda R)_k.
      Eigen::MatrixXd lam = *f.multipliers;
      lam.diagonal().setZero();
      if (lam.isZero(0.0)) return {};
      const double sign = kind == ModelKind::quad_constraint ? 1.0 : -1.0;
      return sign * 4.0 * similarity_laplacian(lam);
    }
    default:
      return {};
  }
}

namespace {

// Relation step shared by every model: minimizes (or finds the stationary
// point of) the objective over all R_k at fixed entity factors.
void relation_step(ModelKind kind, FactorSet& f, const SparseTensor3& x, const Eigen::MatrixXd* c,
                   const Hyperparams& h, const SweepOptions& opt) {
  const auto& left = f.subject_factors();
  const auto& right = f.object_factors();
  const auto e1 = symmetric_eigen(left.transpose() * left);
  const auto e2 = f.kind == FactorKind::quadratic ? e1 : symmetric_eigen(right.transpose() * right);
  const auto rhs = kernels::projected_slices(x, left, right);

  CoupledSolveReport report;
  if ((kind == ModelKind::quad_reg || kind == ModelKind::linear_reg) && opt.coupling == CouplingMode::literal) {
    const double base = h.lambda_r + (kind == ModelKind::linear_reg ? h.rho_inv() : 0.0);
    std::vector<double> alpha(f.r.size(), base);
    for (std::size_t k = 0; k < alpha.size(); ++k) alpha[k] += h.lambda_s * c->row(static_cast<Eigen::Index>(k)).sum();
    f.r = solve_independent_slices(e1, e2, alpha, rhs, &report);
  } else {
    const double alpha = h.lambda_r + (kind == ModelKind::linear_reg ? 2.0 * h.rho_inv() : 0.0);
    const Eigen::MatrixXd coupling = relation_coupling(kind, f, c, h, opt.coupling);
    f.r = solve_coupled_slices(e1, e2, alpha, coupling.size() ? &coupling : nullptr, rhs, &report);
  }
  if (report.indefinite > 0 || report.singular > 0) {
    std::ostringstream os;
    os << "relation step: " << report.indefinite << " negative and " << report.singular
       << " vanishing coefficients (min " << report.min_coefficient << "); least-norm solve used";
    note(opt, os.str());
  }
}

void linear_entity_step(FactorSet& f, const SparseTensor3& x, const Hyperparams& h, double prox,
                        const SweepOptions& opt) {
  // A1 <- [sum_k X_k A2 R_k^T + l_e A2] [sum_k R_k A2^T A2 R_k^T + (l_a1 + l_e + prox) I]^{-1}
  {
    const Eigen::MatrixXd g2 = f.a2.transpose() * f.a2;
    Eigen::MatrixXd n = kernels::slice_product_sum(x, f.a2, f.r, kernels::Side::subject);
    n += h.lambda_e * f.a2;
    Eigen::MatrixXd d = kernels::sandwich_sum(f.r, g2, false);
    d.diagonal().array() += h.a1() + h.lambda_e + prox;
    f.a1 = right_solve_symmetric(n, d);
  }
  notify(opt, Block::entity_subject, f);
  // A2 <- [sum_k X_k^T A1 R_k + l_e A1] [sum_k R_k^T A1^T A1 R_k + (l_a2 + l_e + prox) I]^{-1}
  {
    const Eigen::MatrixXd g1 = f.a1.transpose() * f.a1;
    Eigen::MatrixXd n = kernels::slice_product_sum(x, f.a1, f.r, kernels::Side::object);
    n += h.lambda_e * f.a1;
    Eigen::MatrixXd d = kernels::sandwich_sum(f.r, g1, true);
    d.diagonal().array() += h.a2() + h.lambda_e + prox;
    f.a2 = right_solve_symmetric(n, d);
  }
  notify(opt, Block::entity_object, f);
}

void expect_kind(const FactorSet& f, ModelKind kind) {
  if (f.kind != factor_kind(kind)) {
    throw ValidationError("factor set kind does not match model " + std::string(to_string(kind)));
  }
  if (is_constrained(kind) && !f.multipliers) throw ValidationError("constrained model needs multipliers");
}

FactorSet quadratic_sweep(ModelKind kind, FactorSet f, const SparseTensor3& x, const Eigen::MatrixXd* c,
                          const Hyperparams& h, const SweepOptions& opt) {
  expect_kind(f, kind);
  check_shapes(f, x, c, uses_similarity(kind));
  f.a = rescal_entity_update(f, x, h.lambda_A);
  if (kind == ModelKind::nn_rescal) project_nonnegative(f.a);
  notify(opt, Block::entity, f);
  relation_step(kind, f, x, c, h, opt);
  if (kind == ModelKind::nn_rescal) {
    for (auto& rk : f.r) project_nonnegative(rk);
  }
  notify(opt, Block::relation, f);
  if (kind == ModelKind::quad_constraint) {
    update_multipliers(f, *c, h.lagrange_step);
    notify(opt, Block::multipliers, f);
  }
  return f;
}

FactorSet linear_sweep(ModelKind kind, FactorSet f, const SparseTensor3& x, const Eigen::MatrixXd& c,
                       const Hyperparams& h, const SweepOptions& opt) {
  expect_kind(f, kind);
  check_shapes(f, x, &c, true);
  const double prox = kind == ModelKind::linear_reg ? 2.0 * h.rho_inv() : 0.0;
  linear_entity_step(f, x, h, prox, opt);
  relation_step(kind, f, x, &c, h, opt);
  notify(opt, Block::relation, f);
  if (kind == ModelKind::linear_constraint) {
    update_multipliers(f, c, h.lagrange_step);
    notify(opt, Block::multipliers, f);
  }
  return f;
}

}  // namespace

void update_multipliers(FactorSet& f, const Eigen::MatrixXd& c, double step) {
  if (!f.multipliers) throw ValidationError("factor set has no multipliers");
  auto& lam = *f.multipliers;
  const auto k = f.r.size();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) {
        lam(i, j) = 0.0;
        continue;
      }
      const double violation = (f.r[i] - f.r[j]).squaredNorm() + c(i, j) - 1.0;
      lam(i, j) = (1.0 - step) * lam(i, j) + step * violation;
    }
  }
}

FactorSet rescal_sweep(FactorSet f, const SparseTensor3& x, const Hyperparams& h, const SweepOptions& opt) {
  return quadratic_sweep(ModelKind::rescal, std::move(f), x, nullptr, h, opt);
}

FactorSet nnrescal_sweep(FactorSet f, const SparseTensor3& x, const Hyperparams& h, const SweepOptions& opt) {
  return quadratic_sweep(ModelKind::nn_rescal, std::move(f), x, nullptr, h, opt);
}

FactorSet quadreg_sweep(FactorSet f, const SparseTensor3& x, const Eigen::MatrixXd& c, const Hyperparams& h,
                        const SweepOptions& opt) {
  return quadratic_sweep(ModelKind::quad_reg, std::move(f), x, &c, h, opt);
}

FactorSet model1_sweep(FactorSet f, const SparseTensor3& x, const Eigen::MatrixXd& c, const Hyperparams& h,
                       const SweepOptions& opt) {
  return linear_sweep(ModelKind::linear_reg, std::move(f), x, c, h, opt);
}

FactorSet model2_sweep(FactorSet f, const SparseTensor3& x, const Eigen::MatrixXd& c, const Hyperparams& h,
                       const SweepOptions& opt) {
  return quadratic_sweep(ModelKind::quad_constraint, std::move(f), x, &c, h, opt);
}

FactorSet model3_sweep(FactorSet f, const SparseTensor3& x, const Eigen::MatrixXd& c, const Hyperparams& h,
                       const SweepOptions& opt) {
  return linear_sweep(ModelKind::linear_constraint, std::move(f), x, c, h, opt);
}

FactorSet sweep(ModelKind kind, FactorSet f, const SparseTensor3& x, const Eigen::MatrixXd* c, const Hyperparams& h,
                const SweepOptions& opt) {
  if (uses_similarity(kind) && !c) throw ValidationError(std::string(to_string(kind)) + " needs a similarity matrix");
  switch (kind) {
    case ModelKind::rescal: return rescal_sweep(std::move(f), x, h, opt);
    case ModelKind::nn_rescal: return nnrescal_sweep(std::move(f), x, h, opt);
    case ModelKind::quad_reg: return quadreg_sweep(std::move(f), x, *c, h, opt);
    case ModelKind::quad_constraint: return model2_sweep(std::move(f), x, *c, h, opt);
    case ModelKind::linear_reg: return model1_sweep(std::move(f), x, *c, h, opt);
    case ModelKind::linear_constraint: return model3_sweep(std::move(f), x, *c, h, opt);
  }
  throw ValidationError("unknown model kind");
}

FactorSet merge_entity_factors(const FactorSet& f) {
  if (f.kind != FactorKind::linear) throw ValidationError("merge_entity_factors needs linear (A1/A2) factors");
  FactorSet out;
  out.kind = FactorKind::quadratic;
  out.a = 0.5 * (f.a1 + f.a2);
  out.r = f.r;
  out.multipliers = f.multipliers;
  return out;
}

}  // namespace ketra
