#pragma once

#include <cstdint>
#include <vector>

#include "qtraj/types.hpp"

namespace qtraj {

/// A point of complex projective space, stored as a unit vector with a
/// canonical phase: the entry of largest modulus is real and nonnegative,
/// ties broken by lowest index. The canonical representative makes states
/// hashable and directly comparable.
class ProjectiveState {
 public:
  explicit ProjectiveState(Vector v);

  int dim() const { return static_cast<int>(rep_.size()); }
  const Vector& representative() const { return rep_; }
  Cplx component(int i) const { return rep_(i); }

  bool approx_equal(const ProjectiveState& other, double tol = 1e-12) const;

 private:
  Vector rep_;
};

/// Basis state e_k as a projective point.
ProjectiveState basis_state(int dim, int k);

/// Equal superposition of all basis vectors (real positive components).
ProjectiveState uniform_superposition(int dim);

/// d(x,y) = sqrt(1 - |<x,y>|^2), phase invariant, in [0,1].
double metric_distance(const ProjectiveState& x, const ProjectiveState& y);

/// Rank-one orthogonal projector onto the line of x.
Matrix projector_of(const ProjectiveState& x);

struct AppliedBranch {
  ProjectiveState state;
  double weight;  // ||v x||^2 before renormalization
};

inline constexpr double kZeroBranchFloor = 1e-300;

/// Apply a Kraus element to a state: returns the moved state and the branch
/// weight ||v x||^2. Throws ZeroBranchError when the weight is below the
/// representable floor.
AppliedBranch apply_kraus(const Matrix& v, const ProjectiveState& x);

/// Quantized key for memoization keyed on canonical states. Two states within
/// ~1e-9 of each other in every component land in the same bucket unless they
/// straddle a grid boundary (a harmless cache miss).
struct StateKey {
  std::vector<std::int64_t> q;
  bool operator==(const StateKey&) const = default;
};

StateKey state_key(const ProjectiveState& x, double grid = 1e-9);

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const;
};

}  // namespace qtraj
