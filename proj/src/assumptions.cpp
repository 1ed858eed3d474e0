#include "qtraj/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "qtraj/rng.hpp"

namespace qtraj {

namespace {

Matrix kron(const Matrix& x, const Matrix& y) {
  Matrix out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      out.block(r * y.rows(), c * y.cols(), y.rows(), y.cols()) = x(r, c) * y;
    }
  }
  return out;
}

Matrix unvec(const Vector& v, int d) {
  Matrix m(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) m(i, j) = v(j * d + i);
  }
  return m;
}

double hs_inner(const Matrix& a, const Matrix& b) {
  return (a.adjoint() * b).trace().real();
}

// Orthonormal real span of hermitian matrices under the Hilbert-Schmidt
// inner product, with residual-based insertion.
struct HermitianSpan {
  std::vector<Matrix> basis;

  // Returns the residual after projecting onto the span; if the relative
  // residual exceeds tol the normalized residual joins the basis.
  bool insert(const Matrix& m, double tol = 1e-10) {
    Matrix r = m;
    for (int pass = 0; pass < 2; ++pass) {
      for (const Matrix& b : basis) r -= hs_inner(b, r) * b;
    }
    double norm = std::sqrt(hs_inner(r, r));
    double scale = std::max(1.0, std::sqrt(hs_inner(m, m)));
    if (norm <= tol * scale) return false;
    basis.push_back(r / norm);
    return true;
  }

  bool contains(const Matrix& m, double tol = 1e-10) const {
    Matrix r = m;
    for (const Matrix& b : basis) r -= hs_inner(b, r) * b;
    double scale = std::max(1.0, std::sqrt(hs_inner(m, m)));
    return std::sqrt(hs_inner(r, r)) <= tol * scale;
  }
};

bool proportional_to_identity(const Matrix& m, double tol = 1e-9) {
  int d = static_cast<int>(m.rows());
  Cplx c = m.trace() / static_cast<double>(d);
  Matrix r = m - c * Matrix::Identity(d, d);
  double scale = std::max(1.0, m.norm());
  return r.norm() <= tol * scale;
}

// Complex basis of {X : X B_i = B_i X for all i} via the nullspace of the
// stacked commutator constraints.
std::vector<Matrix> commutant_basis(const std::vector<Matrix>& gens, int d) {
  const int d2 = d * d;
  Matrix stacked(static_cast<Eigen::Index>(gens.size()) * d2, d2);
  Matrix id = Matrix::Identity(d, d);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    // vec(BX - XB) = (I (x) B - B^T (x) I) vec(X)
    stacked.block(static_cast<Eigen::Index>(i) * d2, 0, d2, d2) =
        kron(id, gens[i]) - kron(gens[i].transpose(), id);
  }
  Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cutoff = 1e-9 * std::max(1.0, sv.size() > 0 ? sv(0) : 1.0);
  std::vector<Matrix> out;
  for (Eigen::Index k = 0; k < d2; ++k) {
    double s = k < sv.size() ? sv(k) : 0.0;
    if (s <= cutoff) out.push_back(unvec(svd.matrixV().col(k), d));
  }
  return out;
}

bool commutant_abelian(const std::vector<Matrix>& cb) {
  for (std::size_t a = 0; a < cb.size(); ++a) {
    for (std::size_t b = a + 1; b < cb.size(); ++b) {
      Matrix c = cb[a] * cb[b] - cb[b] * cb[a];
      if (c.norm() > 1e-8 * std::max(1.0, cb[a].norm() * cb[b].norm())) return false;
    }
  }
  return true;
}

// Residual of "every generator compresses to a scalar on span{q0, q1}".
double scalar_compression_residual(const std::vector<Matrix>& gens, const Vector& q0,
                                   const Vector& q1) {
  double res = 0.0;
  for (const Matrix& h : gens) {
    Cplx a = q0.dot(h * q0);
    Cplx b = q1.dot(h * q1);
    Cplx c = q0.dot(h * q1);
    res = std::max(res, std::abs(a - b));
    res = std::max(res, std::abs(c));
  }
  return res;
}

Matrix random_hermitian_combo(const std::vector<Matrix>& cb, RngStream& rng) {
  Matrix z = Matrix::Zero(cb[0].rows(), cb[0].cols());
  for (const Matrix& b : cb) z += Cplx(rng.gaussian(), rng.gaussian()) * b;
  return 0.5 * (z + z.adjoint());
}

// With a non-abelian commutant the word algebra has a multiplicity >= 2
// block, so some 2-dim subspace sees every word operator as a scalar. Two
// eigenspaces of a generic commutant element are bridged by a second element;
// the bridge pairs vectors sharing the same "matrix part", which is exactly
// the scalar-compression plane we need.
std::optional<Matrix> extract_witness_projector(const std::vector<Matrix>& span_basis,
                                                const std::vector<Matrix>& cb, int d) {
  RngStream rng(0x9e3779b97f4a7c15ull, 17);
  for (int attempt = 0; attempt < 8; ++attempt) {
    Matrix z = random_hermitian_combo(cb, rng);
    Eigen::SelfAdjointEigenSolver<Matrix> es(z);
    // Group eigenvalues.
    std::vector<std::vector<int>> groups;
    for (int i = 0; i < d; ++i) {
      if (!groups.empty() &&
          std::abs(es.eigenvalues()(i) - es.eigenvalues()(groups.back().front())) <
              1e-7 * std::max(1.0, z.norm())) {
        groups.back().push_back(i);
      } else {
        groups.push_back({i});
      }
    }
    Matrix z2 = random_hermitian_combo(cb, rng);
    auto column_space = [&](const std::vector<int>& g) {
      Matrix p(d, static_cast<Eigen::Index>(g.size()));
      for (std::size_t k = 0; k < g.size(); ++k) p.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(g[k]);
      return p;
    };
    for (std::size_t a = 0; a < groups.size(); ++a) {
      for (std::size_t b = 0; b < groups.size(); ++b) {
        if (a == b) continue;
        Matrix pa = column_space(groups[a]);
        Matrix pb = column_space(groups[b]);
        Matrix bridge = pb.adjoint() * z2 * pa;
        if (bridge.norm() < 1e-8) continue;
        Eigen::JacobiSVD<Matrix> svd(bridge, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Vector w0 = pa * svd.matrixV().col(0);
        Vector w1 = pb * svd.matrixU().col(0);
        w0.normalize();
        w1.normalize();
        if (scalar_compression_residual(span_basis, w0, w1) < 1e-9) {
          return Matrix(w0 * w0.adjoint() + w1 * w1.adjoint());
        }
      }
      // Degenerate eigenvalue inside one group: any plane of the eigenspace
      // works if the group is already scalar for all generators.
      if (groups[a].size() >= 2) {
        Matrix pa = column_space(groups[a]);
        Vector w0 = pa.col(0);
        Vector w1 = pa.col(1);
        if (scalar_compression_residual(span_basis, w0, w1) < 1e-9) {
          return Matrix(w0 * w0.adjoint() + w1 * w1.adjoint());
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace

Matrix vectorized_channel(const KrausFamily& family) {
  require_well_formed(family);
  const int d = family.dim;
  Matrix m = Matrix::Zero(d * d, d * d);
  for (const Matrix& a : family.operators) m += kron(a.conjugate(), a);
  return m;
}

ChannelSpectrum channel_spectrum(const KrausFamily& family) {
  Matrix m = vectorized_channel(family);
  Eigen::ComplexEigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  ChannelSpectrum spec;
  spec.eigenvalues = es.eigenvalues();
  double radius = 0.0;
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
    double mod = std::abs(spec.eigenvalues(i));
    radius = std::max(radius, mod);
    if (std::abs(spec.eigenvalues(i) - Cplx(1.0, 0.0)) <= kSpectralTol) ++spec.fixed_space_dim;
    if (mod >= 1.0 - kSpectralTol) ++spec.peripheral_count;
  }
  if (radius > 1.0 + kSpectralTol) {
    throw StructuralError("channel spectrum: spectral radius above one; family not stochastic");
  }
  if (spec.fixed_space_dim == 0) {
    throw StructuralError("channel spectrum: no eigenvalue one; family not stochastic");
  }
  return spec;
}

DensityMatrix compute_rho_inv(const KrausFamily& family) {
  Matrix m = vectorized_channel(family);
  const int d = family.dim;
  Eigen::ComplexEigenSolver<Matrix> es(m, /*computeEigenvectors=*/true);

  int fixed = 0;
  Eigen::Index best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    double dist = std::abs(es.eigenvalues()(i) - Cplx(1.0, 0.0));
    if (dist <= kSpectralTol) ++fixed;
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  if (fixed > 1) {
    throw NonUniqueFixedPointError("compute_rho_inv: fixed space dimension " +
                                   std::to_string(fixed) + " > 1 ((Erg) fails)");
  }
  Matrix x = unvec(es.eigenvectors().col(best), d);
  Cplx tr = x.trace();
  if (std::abs(tr) < 1e-12) {
    throw NonUniqueFixedPointError("compute_rho_inv: traceless fixed matrix");
  }
  x /= tr;
  x = 0.5 * (x + x.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> sa(x);
  Eigen::VectorXd ev = sa.eigenvalues();
  for (int i = 0; i < d; ++i) ev(i) = std::max(ev(i), 0.0);
  Matrix rho = sa.eigenvectors() * ev.asDiagonal() * sa.eigenvectors().adjoint();
  rho /= rho.trace().real();

  Matrix residual = rho;
  {
    Matrix image = Matrix::Zero(d, d);
    for (const Matrix& a : family.operators) image += a * rho * a.adjoint();
    residual = image - rho;
  }
  if (operator_norm(residual) > 1e-9) {
    throw NoConvergenceError("compute_rho_inv: fixed point residual above 1e-9");
  }
  return DensityMatrix(std::move(rho));
}

ErgResult check_erg(const KrausFamily& family) {
  ChannelSpectrum spec = channel_spectrum(family);
  if (spec.fixed_space_dim != 1) return ErgResult{false, 0};
  DensityMatrix rho = compute_rho_inv(family);
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix(), Eigen::EigenvaluesOnly);
  int rank = 0;
  for (int i = 0; i < family.dim; ++i) {
    if (es.eigenvalues()(i) > kSpectralTol) ++rank;
  }
  return ErgResult{true, rank};
}

PurResult check_pur(const KrausFamily& family, int max_word_len) {
  require_well_formed(family);
  const int d = family.dim;
  const int K = family.branch_count();
  const int L = max_word_len > 0 ? max_word_len : d * d;

  PurResult result;

  // Real span of the word operators W_w^* W_w, generated by closing {Id}
  // under X -> A_j^* X A_j (one-letter prefixing). Once the span is closed
  // under every letter map, all longer words stay inside it.
  HermitianSpan span;
  Matrix id = Matrix::Identity(d, d);
  span.insert(id / id.norm());
  std::deque<std::pair<Matrix, int>> queue;  // (basis element, generation depth)
  queue.push_back({span.basis.back(), 0});
  bool hit_depth_cap = false;
  int deepest = 0;
  while (!queue.empty()) {
    auto [b, depth] = queue.front();
    queue.pop_front();
    deepest = std::max(deepest, depth);
    if (depth >= L) {
      // Unprocessed element at the cap: closure not established.
      for (int j = 0; j < K; ++j) {
        Matrix child = family.op(j).adjoint() * b * family.op(j);
        if (!span.contains(child)) hit_depth_cap = true;
      }
      continue;
    }
    for (int j = 0; j < K; ++j) {
      Matrix child = family.op(j).adjoint() * b * family.op(j);
      if (span.insert(child)) queue.push_back({span.basis.back(), depth + 1});
    }
  }
  result.levels_searched = std::min(L, deepest + 1);
  result.generators_stabilized = !hit_depth_cap;

  // Shortest word whose W^*W is not a scalar (breadth-first over rays).
  {
    std::deque<std::pair<Matrix, Word>> frontier;
    frontier.push_back({id, Word{}});
    std::size_t explored = 0;
    while (!frontier.empty() && explored < 20000 && !result.witness_word) {
      auto [t, w] = frontier.front();
      frontier.pop_front();
      ++explored;
      if (static_cast<int>(w.size()) >= L) continue;
      for (int j = 0; j < K; ++j) {
        // Prefixing the word by letter j in time order gives A_j^* T A_j.
        Matrix child = family.op(j).adjoint() * t * family.op(j);
        Word cw;
        cw.letters.reserve(w.size() + 1);
        cw.letters.push_back(j);
        cw.letters.insert(cw.letters.end(), w.letters.begin(), w.letters.end());
        double n = child.norm();
        if (n < 1e-14) continue;
        if (!proportional_to_identity(child)) {
          result.witness_word = cw;
          break;
        }
        frontier.push_back({child / n, cw});
      }
    }
  }

  if (span.basis.size() == 1) {
    // Every word operator is a scalar multiple of the identity, so the
    // identity projector (rank d >= 2) defeats purification.
    result.status = PurStatus::no;
    result.witness_projector = id;
    result.witness_word.reset();
    result.generators_stabilized = true;
    return result;
  }

  if (d == 2) {
    // The only rank >= 2 projector is the identity, so a single non-scalar
    // word operator settles the question.
    result.status = result.witness_word ? PurStatus::yes : PurStatus::unknown;
    return result;
  }

  std::vector<Matrix> cb = commutant_basis(span.basis, d);
  if (!commutant_abelian(cb)) {
    auto witness = extract_witness_projector(span.basis, cb, d);
    if (witness && result.generators_stabilized) {
      result.status = PurStatus::no;
      result.witness_projector = witness;
      result.witness_word.reset();
      return result;
    }
    result.status = PurStatus::unknown;
    return result;
  }

  // Abelian commutant: no multiplicity >= 2 block, so no subspace of
  // dimension >= 2 sees every word operator as a scalar.
  if (result.generators_stabilized && result.witness_word) {
    result.status = PurStatus::yes;
  } else {
    result.status = PurStatus::unknown;
  }
  return result;
}

int estimate_period(const KrausFamily& family) {
  ErgResult erg = check_erg(family);
  if (!erg.holds) {
    throw PreconditionError("estimate_period: (Erg) not verified for this family");
  }
  return channel_spectrum(family).peripheral_count;
}

AssumptionReport run_assumption_checks(const KrausFamily& family) {
  AssumptionReport report;
  ErgResult erg = check_erg(family);
  report.erg = erg.holds;
  report.minimal_subspace_dim = erg.minimal_subspace_dim;
  if (erg.holds) {
    report.rho_inv = compute_rho_inv(family);
    report.period = estimate_period(family);
  }
  PurResult pur = check_pur(family);
  report.pur = pur.status;
  report.pur_witness_word = pur.witness_word;
  report.pur_witness_projector = pur.witness_projector;
  return report;
}

std::string to_string(PurStatus s) {
  switch (s) {
    case PurStatus::yes: return "yes";
    case PurStatus::no: return "no";
    case PurStatus::unknown: return "unknown";
  }
  return "unknown";
}

}  // namespace qtraj
