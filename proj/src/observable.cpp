#include "qtraj/observable.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

namespace qtraj {

namespace {

bool exactly_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) != b(i)) return false;
  }
  return true;
}

}  // namespace

Observable Observable::population(int dim, int k) {
  if (k < 0 || k >= dim) throw StructuralError("population observable: index out of range");
  Vector u = Vector::Zero(dim);
  u(k) = 1.0;
  Observable g = overlap(u);
  g.name = "pop" + std::to_string(k);
  return g;
}

Observable Observable::overlap(const Vector& u) {
  double n = u.norm();
  if (!(n > 0.0)) throw StructuralError("overlap observable: zero direction");
  Vector unit = u / n;
  Observable g;
  g.name = "overlap";
  g.eval = [unit](const ProjectiveState& x) {
    return std::norm(unit.dot(x.representative()));
  };
  g.eval_raw = [unit](const Cplx* x, int dim) {
    Cplx acc = 0.0;
    for (int i = 0; i < dim; ++i) acc += std::conj(unit(i)) * x[i];
    return std::norm(acc);
  };
  g.holder_exponent = 1.0;
  g.holder_constant = 2.0;
  g.quadratic_form = unit * unit.adjoint();
  return g;
}

Observable Observable::constant(int dim, double c) {
  (void)dim;
  Observable g;
  g.name = "const";
  g.eval = [c](const ProjectiveState&) { return c; };
  g.holder_exponent = 1.0;
  g.holder_constant = 0.0;
  return g;
}

Observable Observable::atom_indicator(std::vector<ProjectiveState> atoms) {
  Observable g;
  g.name = "atom_indicator";
  auto shared = std::make_shared<std::vector<ProjectiveState>>(std::move(atoms));
  g.eval = [shared](const ProjectiveState& x) {
    for (const ProjectiveState& a : *shared) {
      if (exactly_equal(a.representative(), x.representative())) return 1.0;
    }
    return 0.0;
  };
  g.holder_exponent = 1.0;
  g.holder_constant = std::numeric_limits<double>::infinity();  // discontinuous
  return g;
}

}  // namespace qtraj
