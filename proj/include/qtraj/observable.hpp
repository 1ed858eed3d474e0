#pragma once

#include <functional>
#include <optional>
#include <string>

#include "qtraj/projective.hpp"

namespace qtraj {

/// A real-valued function on projective space with declared Hölder data.
/// When the function is a quadratic form x -> <x, G x> (all the built-in
/// populations are), `quadratic_form` is set and invariant means become
/// exactly computable from the fixed density matrix.
struct Observable {
  std::string name;
  std::function<double(const ProjectiveState&)> eval;
  // Optional allocation-free path for tight sampling loops; must agree with
  // `eval` on canonical representatives.
  std::function<double(const Cplx*, int)> eval_raw;
  double holder_exponent = 1.0;
  double holder_constant = 2.0;
  std::optional<Matrix> quadratic_form;

  double operator()(const ProjectiveState& x) const { return eval(x); }

  double value_at(const Cplx* components, int dim) const {
    if (eval_raw) return eval_raw(components, dim);
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = components[i];
    return eval(ProjectiveState(std::move(v)));
  }

  /// |<e_k, x>|^2, Lipschitz with constant 2.
  static Observable population(int dim, int k);

  /// |<u, x>|^2 for a fixed unit vector u.
  static Observable overlap(const Vector& u);

  static Observable constant(int dim, double c);

  /// Indicator of exact membership in a finite set of states. Discontinuous;
  /// used by the law-of-large-numbers counterexample.
  static Observable atom_indicator(std::vector<ProjectiveState> atoms);
};

}  // namespace qtraj
