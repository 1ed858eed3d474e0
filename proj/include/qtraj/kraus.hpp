#pragma once

#include <vector>

#include "qtraj/projective.hpp"
#include "qtraj/types.hpp"

namespace qtraj {

/// A finitely supported measurement family: matrices A_1..A_K with
/// sum_i A_i^* A_i = Id up to `tolerance`.
struct KrausFamily {
  int dim = 0;
  std::vector<Matrix> operators;
  double tolerance = 1e-9;

  int branch_count() const { return static_cast<int>(operators.size()); }
  const Matrix& op(int i) const { return operators[static_cast<std::size_t>(i)]; }
};

/// Checks shape consistency; throws StructuralError on malformed input.
void require_well_formed(const KrausFamily& family);

struct StochasticityReport {
  double residual = 0.0;  // ||sum A_i^* A_i - Id|| (operator norm)
  bool pass = false;
};

StochasticityReport validate_stochasticity(const KrausFamily& family);

/// Outcome word: branch indices (0-based), applied left to right in time,
/// i.e. the product of word (i_0,...,i_{n-1}) is A_{i_{n-1}} ... A_{i_0}.
struct Word {
  std::vector<int> letters;

  std::size_t size() const { return letters.size(); }
  bool operator==(const Word&) const = default;
};

struct ScaledMatrix {
  Matrix matrix;      // rescaled to unit sup-norm (except the zero matrix)
  double log_scale;   // log of the extracted scale
};

/// Product of the word's operators with per-step rescaling so that words of
/// length 1e6 neither under- nor overflow. Empty word gives (Id, 0).
ScaledMatrix word_product(const KrausFamily& family, const Word& w);

/// Density matrix: PSD, unit trace. Validated on construction.
class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix rho);

  int dim() const { return static_cast<int>(rho_.rows()); }
  const Matrix& matrix() const { return rho_; }

  static DensityMatrix from_projector(const ProjectiveState& x);

 private:
  Matrix rho_;
};

/// The average-evolution channel rho -> sum_i A_i rho A_i^*.
DensityMatrix channel_apply(const KrausFamily& family, const DensityMatrix& rho);

/// Probability of observing outcome word w from initial density rho:
/// tr(W_w rho W_w^*).
double word_probability(const DensityMatrix& rho, const Word& w, const KrausFamily& family);

}  // namespace qtraj
