#include "qtraj/estimators.hpp"

#include <cmath>

namespace qtraj {

ProjectiveState mle_initial_estimator(const Matrix& w) {
  if (sup_norm(w) <= 0.0) throw StructuralError("mle_initial_estimator: zero matrix");
  Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeFullV);
  return ProjectiveState(svd.matrixV().col(0));
}

std::vector<ProjectiveState> evolved_estimator(const KrausFamily& family, const Word& word) {
  require_well_formed(family);
  std::vector<ProjectiveState> out;
  out.reserve(word.size() + 1);
  Matrix prod = Matrix::Identity(family.dim, family.dim);
  out.push_back(mle_initial_estimator(prod));  // empty product: tie at Id
  for (int letter : word.letters) {
    if (letter < 0 || letter >= family.branch_count()) {
      throw StructuralError("evolved_estimator: branch index out of range");
    }
    prod = family.op(letter) * prod;
    double s = sup_norm(prod);
    if (s > 0.0) prod /= s;
    ProjectiveState z = mle_initial_estimator(prod);
    Vector moved = prod * z.representative();
    double n2 = moved.squaredNorm();
    if (!(n2 >= kZeroBranchFloor)) {
      throw ZeroBranchError("evolved_estimator: W z vanished");
    }
    out.emplace_back(std::move(moved));
  }
  return out;
}

}  // namespace qtraj
