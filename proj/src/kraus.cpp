#include "qtraj/kraus.hpp"

#include <cmath>

namespace qtraj {

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double trace_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

double sup_norm(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

void require_well_formed(const KrausFamily& family) {
  if (family.dim < 1) throw StructuralError("kraus family: dim must be >= 1");
  if (family.operators.empty()) throw StructuralError("kraus family: needs at least one operator");
  if (family.tolerance < 0.0) throw StructuralError("kraus family: negative tolerance");
  for (const Matrix& a : family.operators) {
    if (a.rows() != family.dim || a.cols() != family.dim) {
      throw StructuralError("kraus family: operator shape mismatch");
    }
    if (!a.allFinite()) throw StructuralError("kraus family: non-finite entries");
  }
}

StochasticityReport validate_stochasticity(const KrausFamily& family) {
  require_well_formed(family);
  Matrix s = Matrix::Zero(family.dim, family.dim);
  for (const Matrix& a : family.operators) s += a.adjoint() * a;
  s -= Matrix::Identity(family.dim, family.dim);
  StochasticityReport report;
  report.residual = operator_norm(s);
  report.pass = report.residual <= family.tolerance;
  return report;
}

ScaledMatrix word_product(const KrausFamily& family, const Word& w) {
  require_well_formed(family);
  Matrix prod = Matrix::Identity(family.dim, family.dim);
  double log_scale = 0.0;
  for (int letter : w.letters) {
    if (letter < 0 || letter >= family.branch_count()) {
      throw StructuralError("word_product: branch index out of range");
    }
    prod = family.op(letter) * prod;
    double s = sup_norm(prod);
    if (s > 0.0) {
      prod /= s;
      log_scale += std::log(s);
    }
  }
  return ScaledMatrix{std::move(prod), log_scale};
}

DensityMatrix::DensityMatrix(Matrix rho) : rho_(std::move(rho)) {
  if (rho_.rows() != rho_.cols() || rho_.rows() == 0) {
    throw StructuralError("density matrix: must be square");
  }
  if (sup_norm(rho_ - rho_.adjoint()) > 1e-10) {
    throw StructuralError("density matrix: not hermitian");
  }
  rho_ = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw StructuralError("density matrix: negative eigenvalue");
  }
  if (std::abs(rho_.trace().real() - 1.0) > 1e-10) {
    throw StructuralError("density matrix: trace not one");
  }
}

DensityMatrix DensityMatrix::from_projector(const ProjectiveState& x) {
  return DensityMatrix(projector_of(x));
}

DensityMatrix channel_apply(const KrausFamily& family, const DensityMatrix& rho) {
  require_well_formed(family);
  if (rho.dim() != family.dim) throw StructuralError("channel_apply: dimension mismatch");
  Matrix out = Matrix::Zero(family.dim, family.dim);
  for (const Matrix& a : family.operators) out += a * rho.matrix() * a.adjoint();
  return DensityMatrix(std::move(out));
}

double word_probability(const DensityMatrix& rho, const Word& w, const KrausFamily& family) {
  if (rho.dim() != family.dim) throw StructuralError("word_probability: dimension mismatch");
  ScaledMatrix sm = word_product(family, w);
  double t = (sm.matrix * rho.matrix() * sm.matrix.adjoint()).trace().real();
  double p = t * std::exp(2.0 * sm.log_scale);
  if (p < 0.0) p = 0.0;
  return p;
}

}  // namespace qtraj
