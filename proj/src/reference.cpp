#include "qtraj/reference.hpp"

#include <cmath>

namespace qtraj {

KeepSwitchModel build_keep_switch(double p) {
  if (!(p > 0.0) || !(p < 0.5)) {
    throw StructuralError("keep-switch: p must lie in the open interval (0, 1/2)");
  }
  double q = 1.0 - p;
  Matrix a1(2, 2), a2(2, 2);
  a1 << std::sqrt(p), 0.0, 0.0, std::sqrt(q);
  a2 << 0.0, std::sqrt(p), std::sqrt(q), 0.0;
  KrausFamily family;
  family.dim = 2;
  family.operators = {a1, a2};
  family.tolerance = 1e-12;
  return KeepSwitchModel{p, q, std::move(family), basis_state(2, 0), basis_state(2, 1)};
}

KeepSwitchOracles keep_switch_oracles(const KeepSwitchModel& model, const Observable& g) {
  double ga = g(model.atom_a);
  double gb = g(model.atom_b);
  KeepSwitchOracles o;
  o.invariant_atoms = {{model.atom_a, model.p}, {model.atom_b, model.q}};
  o.invariant_mean = model.p * ga + model.q * gb;
  o.gamma_sq = model.p * ga * ga + model.q * gb * gb - o.invariant_mean * o.invariant_mean;
  o.gtilde_a = ga - o.invariant_mean;
  o.gtilde_b = gb - o.invariant_mean;
  return o;
}

KeepSwitchOrbitWalker::KeepSwitchOrbitWalker(const KeepSwitchModel& model,
                                             double initial_log_ratio)
    : log_p_over_q_half_(0.5 * (std::log(model.p) - std::log(model.q))),
      p_(model.p),
      q_(model.q),
      log_ratio_(initial_log_ratio) {}

double KeepSwitchOrbitWalker::population_a() const {
  // |x_a|^2 = r^2/(1+r^2) with r = exp(l); evaluate on the stable side.
  double l = log_ratio_;
  if (l <= 0.0) {
    double r2 = std::exp(2.0 * l);
    return r2 / (1.0 + r2);
  }
  double s2 = std::exp(-2.0 * l);
  return 1.0 / (1.0 + s2);
}

double KeepSwitchOrbitWalker::log_overlap_a() const {
  // |x_a| = r / sqrt(1 + r^2) with r = exp(l).
  double l = log_ratio_;
  if (l <= 0.0) return l - 0.5 * std::log1p(std::exp(2.0 * l));
  return -0.5 * std::log1p(std::exp(-2.0 * l));
}

int KeepSwitchOrbitWalker::step(RngStream& rng) {
  // Branch 0 keeps the ratio and shifts l by log sqrt(p/q); branch 1 swaps
  // components first. Weights: w0 = p|x_a|^2 + q|x_b|^2, w1 = 1 - w0.
  double pa = population_a();
  double w0 = p_ * pa + q_ * (1.0 - pa);
  double u = rng.uniform();
  if (u < w0) {
    log_ratio_ += log_p_over_q_half_;
    return 0;
  }
  log_ratio_ = -log_ratio_ + log_p_over_q_half_;
  return 1;
}

ProjectiveState KeepSwitchOrbitWalker::state() const {
  double pa = population_a();
  Vector v(2);
  v << std::sqrt(pa), std::sqrt(1.0 - pa);
  return ProjectiveState(std::move(v));
}

std::vector<NamedControl> negative_controls() {
  std::vector<NamedControl> out;

  {
    KrausFamily id;
    id.dim = 2;
    id.operators = {Matrix::Identity(2, 2)};
    id.tolerance = 1e-12;
    out.push_back({"identity", std::move(id), false, false, 0});
  }
  {
    Matrix u(2, 2);
    u << 1.0, 0.0, 0.0, Cplx(0.0, 1.0);
    KrausFamily f;
    f.dim = 2;
    f.operators = {u};
    f.tolerance = 1e-12;
    out.push_back({"single_unitary", std::move(f), false, false, 0});
  }
  {
    // Two independent one-dimensional families stacked on the diagonal:
    // both spans of e_0 and e_1 are invariant, so (Erg) fails.
    Matrix a1(2, 2), a2(2, 2);
    a1 << std::sqrt(0.3), 0.0, 0.0, std::sqrt(0.6);
    a2 << std::sqrt(0.7), 0.0, 0.0, std::sqrt(0.4);
    KrausFamily f;
    f.dim = 2;
    f.operators = {a1, a2};
    f.tolerance = 1e-12;
    out.push_back({"block_reducible", std::move(f), true, false, 0});
  }
  {
    // Rank-one two-cycle: the channel swaps the two populations, giving
    // peripheral spectrum {1, -1}.
    Matrix a1 = Matrix::Zero(2, 2), a2 = Matrix::Zero(2, 2);
    a1(1, 0) = 1.0;
    a2(0, 1) = 1.0;
    KrausFamily f;
    f.dim = 2;
    f.operators = {a1, a2};
    f.tolerance = 1e-12;
    out.push_back({"two_cycle", std::move(f), true, true, 2});
  }
  return out;
}

KrausFamily random_valid_family(int dim, int branches, std::uint64_t seed) {
  if (dim < 2 || branches < 2) {
    throw StructuralError("random_valid_family: need dim >= 2 and branches >= 2");
  }
  RngStream rng(seed, 0xfa711ull);
  for (int attempt = 0; attempt < 16; ++attempt) {
    std::vector<Matrix> raw;
    raw.reserve(static_cast<std::size_t>(branches));
    for (int b = 0; b < branches; ++b) {
      Matrix m(dim, dim);
      for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) m(r, c) = Cplx(rng.gaussian(), rng.gaussian());
      }
      raw.push_back(std::move(m));
    }
    Matrix s = Matrix::Zero(dim, dim);
    for (const Matrix& m : raw) s += m.adjoint() * m;
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    if (es.eigenvalues().minCoeff() < 1e-12) continue;  // singular draw, retry
    Matrix inv_sqrt = es.eigenvectors() *
                      es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                      es.eigenvectors().adjoint();
    KrausFamily family;
    family.dim = dim;
    family.tolerance = 1e-10;
    for (Matrix& m : raw) family.operators.push_back(m * inv_sqrt);
    return family;
  }
  throw StructuralError("random_valid_family: normalization stayed singular after retries");
}

ProjectiveState random_state(int dim, RngStream& rng) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Cplx(rng.gaussian(), rng.gaussian());
  return ProjectiveState(std::move(v));
}

DensityMatrix random_density(int dim, RngStream& rng) {
  Matrix g(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) g(r, c) = Cplx(rng.gaussian(), rng.gaussian());
  }
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(std::move(rho));
}

}  // namespace qtraj
