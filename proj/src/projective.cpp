#include "qtraj/projective.hpp"

#include <algorithm>
#include <cmath>

namespace qtraj {

namespace {

void canonicalize(Vector& v) {
  double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw StructuralError("projective state: representative has zero or non-finite norm");
  }
  v /= n;
  // Largest-modulus entry, ties by lowest index (strict > keeps the first).
  int idx = 0;
  double best = std::abs(v(0));
  for (int i = 1; i < v.size(); ++i) {
    double a = std::abs(v(i));
    if (a > best) {
      best = a;
      idx = i;
    }
  }
  Cplx pivot = v(idx);
  double mag = std::abs(pivot);
  v *= std::conj(pivot) / mag;
  v(idx) = Cplx(std::abs(v(idx)), 0.0);  // kill rounding residue in the pivot
}

}  // namespace

ProjectiveState::ProjectiveState(Vector v) : rep_(std::move(v)) {
  if (rep_.size() == 0) throw StructuralError("projective state: empty vector");
  canonicalize(rep_);
}

bool ProjectiveState::approx_equal(const ProjectiveState& other, double tol) const {
  if (other.dim() != dim()) return false;
  return (rep_ - other.rep_).norm() <= tol;
}

ProjectiveState basis_state(int dim, int k) {
  if (k < 0 || k >= dim) throw StructuralError("basis_state: index out of range");
  Vector v = Vector::Zero(dim);
  v(k) = 1.0;
  return ProjectiveState(std::move(v));
}

ProjectiveState uniform_superposition(int dim) {
  Vector v = Vector::Ones(dim);
  return ProjectiveState(std::move(v));
}

double metric_distance(const ProjectiveState& x, const ProjectiveState& y) {
  if (x.dim() != y.dim()) throw StructuralError("metric_distance: dimension mismatch");
  // sqrt(1 - |<x,y>|^2) computed as the norm of y's component orthogonal to
  // x; the direct formula loses all precision near coincident states.
  Cplx ov = x.representative().dot(y.representative());
  double s = (y.representative() - ov * x.representative()).norm();
  if (s > 1.0) s = 1.0;
  return s;
}

Matrix projector_of(const ProjectiveState& x) {
  const Vector& v = x.representative();
  return v * v.adjoint();
}

AppliedBranch apply_kraus(const Matrix& v, const ProjectiveState& x) {
  if (v.rows() != v.cols() || v.rows() != x.dim()) {
    throw StructuralError("apply_kraus: operator/state dimension mismatch");
  }
  Vector moved = v * x.representative();
  double w = moved.squaredNorm();
  if (!(w >= kZeroBranchFloor)) {
    throw ZeroBranchError("apply_kraus: branch weight below floor (kernel null event)");
  }
  return AppliedBranch{ProjectiveState(std::move(moved)), w};
}

StateKey state_key(const ProjectiveState& x, double grid) {
  StateKey k;
  k.q.resize(2 * static_cast<std::size_t>(x.dim()));
  const Vector& v = x.representative();
  for (int i = 0; i < x.dim(); ++i) {
    k.q[2 * i] = static_cast<std::int64_t>(std::llround(v(i).real() / grid));
    k.q[2 * i + 1] = static_cast<std::int64_t>(std::llround(v(i).imag() / grid));
  }
  return k;
}

std::size_t StateKeyHash::operator()(const StateKey& k) const {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (std::int64_t x : k.q) {
    auto u = static_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) {
      h ^= (u >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return static_cast<std::size_t>(h);
}

}  // namespace qtraj
