#include "ketra/kron.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ketra/error.hpp"

namespace ketra {

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ValidationError("eigendecomposition needs a square matrix");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
  return {eig.eigenvalues(), eig.eigenvectors()};
}

Eigen::MatrixXd kron_ridge_solve(const Eigen::MatrixXd& g1, const Eigen::MatrixXd& g2, double alpha,
                                 const Eigen::MatrixXd& rhs) {
  if (g1.rows() != rhs.rows() || g2.rows() != rhs.cols()) throw ValidationError("kron_ridge_solve: shape mismatch");
  const auto e1 = symmetric_eigen(g1);
  const auto e2 = symmetric_eigen(g2);
  Eigen::MatrixXd coef = e1.values * e2.values.transpose();
  coef.array() += alpha;
  const double scale = coef.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || coef.cwiseAbs().minCoeff() <= 1e-14 * scale) {
    throw NumericalError("kron_ridge_solve: singular system");
  }
  Eigen::MatrixXd t = e1.vectors.transpose() * rhs * e2.vectors;
  t.array() /= coef.array();
  return e1.vectors * t * e2.vectors.transpose();
}

std::vector<Eigen::MatrixXd> solve_coupled_slices(const SymmetricEigen& g1, const SymmetricEigen& g2, double alpha,
                                                  const Eigen::MatrixXd* coupling,
                                                  const std::vector<Eigen::MatrixXd>& rhs,
                                                  CoupledSolveReport* report) {
  const auto p = g1.values.size();
  const auto q = g2.values.size();
  const auto k = static_cast<Eigen::Index>(rhs.size());
  if (coupling && (coupling->rows() != k || coupling->cols() != k)) {
    throw ValidationError("coupling matrix does not match the number of slices");
  }

  // Columns of `stack` are vec(V1^T B_k V2).
  Eigen::MatrixXd stack(p * q, k);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::MatrixXd t = g1.vectors.transpose() * rhs[i] * g2.vectors;
    stack.col(i) = Eigen::Map<const Eigen::VectorXd>(t.data(), p * q);
  }

  Eigen::VectorXd sigma = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd u;
  if (coupling) {
    const auto ec = symmetric_eigen(*coupling);
    sigma = ec.values;
    u = ec.vectors;
    stack = stack * u;
  }

  // coefficient for entry (a, b) of mode m
  Eigen::VectorXd base(p * q);
  for (Eigen::Index b = 0; b < q; ++b) {
    for (Eigen::Index a = 0; a < p; ++a) base(a + b * p) = g1.values(a) * g2.values(b) + alpha;
  }
  double scale = 0.0;
  for (Eigen::Index m = 0; m < k; ++m) scale = std::max(scale, (base.array() + sigma(m)).abs().maxCoeff());

  CoupledSolveReport local;
  local.min_coefficient = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; m < k; ++m) {
    for (Eigen::Index i = 0; i < p * q; ++i) {
      const double c = base(i) + sigma(m);
      local.min_coefficient = std::min(local.min_coefficient, c);
      if (!(std::abs(c) > 1e-12 * scale)) {
        stack(i, m) = 0.0;
        ++local.singular;
        continue;
      }
      if (c < 0.0) ++local.indefinite;
      stack(i, m) /= c;
    }
  }
  if (coupling) stack = stack * u.transpose();

  std::vector<Eigen::MatrixXd> out(rhs.size());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Map<const Eigen::MatrixXd> t(stack.col(i).data(), p, q);
    out[i] = g1.vectors * t * g2.vectors.transpose();
  }
  if (report) *report = local;
  return out;
}

std::vector<Eigen::MatrixXd> solve_independent_slices(const SymmetricEigen& g1, const SymmetricEigen& g2,
                                                      const std::vector<double>& alpha,
                                                      const std::vector<Eigen::MatrixXd>& rhs,
                                                      CoupledSolveReport* report) {
  if (alpha.size() != rhs.size()) throw ValidationError("one ridge coefficient per slice required");
  const Eigen::MatrixXd prod = g1.values * g2.values.transpose();
  const auto k = static_cast<Eigen::Index>(rhs.size());
  std::vector<Eigen::MatrixXd> out(rhs.size());
  std::vector<CoupledSolveReport> per(rhs.size());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::MatrixXd coef = prod.array() + alpha[i];
    const double scale = coef.cwiseAbs().maxCoeff();
    Eigen::MatrixXd t = g1.vectors.transpose() * rhs[i] * g2.vectors;
    auto& rep = per[i];
    rep.min_coefficient = coef.minCoeff();
    for (Eigen::Index b = 0; b < t.cols(); ++b) {
      for (Eigen::Index a = 0; a < t.rows(); ++a) {
        const double c = coef(a, b);
        if (!(std::abs(c) > 1e-12 * scale)) {
          t(a, b) = 0.0;
          ++rep.singular;
          continue;
        }
        if (c < 0.0) ++rep.indefinite;
        t(a, b) /= c;
      }
    }
    out[i] = g1.vectors * t * g2.vectors.transpose();
  }
  if (report) {
    CoupledSolveReport total;
    total.min_coefficient = std::numeric_limits<double>::infinity();
    for (const auto& r : per) {
      total.singular += r.singular;
      total.indefinite += r.indefinite;
      total.min_coefficient = std::min(total.min_coefficient, r.min_coefficient);
    }
    *report = total;
  }
  return out;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

}  // namespace ketra
