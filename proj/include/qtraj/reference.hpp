#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qtraj/kraus.hpp"
#include "qtraj/observable.hpp"
#include "qtraj/rng.hpp"

namespace qtraj {

/// The two-operator d=2 model with A_1 = diag(sqrt p, sqrt q) and
/// A_2 = antidiag(sqrt p, sqrt q), p in (0, 1/2), q = 1-p. Everything about
/// it is available in closed form, which makes it the exact oracle for the
/// statistical layers.
struct KeepSwitchModel {
  double p;
  double q;
  KrausFamily family;
  ProjectiveState atom_a;  // e_0
  ProjectiveState atom_b;  // e_1
};

KeepSwitchModel build_keep_switch(double p);

struct KeepSwitchOracles {
  std::vector<std::pair<ProjectiveState, double>> invariant_atoms;  // {(e_a, p), (e_b, q)}
  double invariant_mean;  // E_inv(g) = p g(e_a) + q g(e_b)
  double gamma_sq;        // p g^2(e_a) + q g^2(e_b) - invariant_mean^2
  double gtilde_a;        // g(e_a) - invariant_mean
  double gtilde_b;        // g(e_b) - invariant_mean
};

KeepSwitchOracles keep_switch_oracles(const KeepSwitchModel& model, const Observable& g);

/// Exact Keep-Switch trajectory on the invariant real-positive orbit,
/// parametrized by the log amplitude ratio l = log(|x_a| / |x_b|). Both Kraus
/// elements preserve real nonnegative components, so a start such as e_+ stays
/// on the orbit forever. Tracking l directly avoids the floating-point
/// collapse onto the atoms that the generic sampler suffers after a few
/// thousand steps, so atom membership stays exactly decidable.
class KeepSwitchOrbitWalker {
 public:
  KeepSwitchOrbitWalker(const KeepSwitchModel& model, double initial_log_ratio);

  /// Advance one step; returns the chosen branch (0 or 1).
  int step(RngStream& rng);

  double log_ratio() const { return log_ratio_; }
  bool at_atom() const { return std::isinf(log_ratio_); }

  /// |<e_a, x>|^2 evaluated stably from the log ratio.
  double population_a() const;

  /// log |<e_a, x>|, finite exactly when the chain is off the atoms; stays
  /// meaningful far past the double underflow threshold.
  double log_overlap_a() const;

  ProjectiveState state() const;

 private:
  double log_p_over_q_half_;  // log sqrt(p/q) < 0
  double p_;
  double q_;
  double log_ratio_;
};

struct NamedControl {
  std::string name;
  KrausFamily family;
  bool expect_pur;      // whether (Pur) should hold
  bool expect_erg;      // whether (Erg) should hold
  int expect_period;    // peripheral count when erg holds, else 0
};

/// Degenerate families exercising the assumption checkers: identity family,
/// a single unitary, a block-diagonal reducible family, and a rank-one
/// two-cycle with period 2.
std::vector<NamedControl> negative_controls();

/// Draw B_i with iid complex Gaussian entries and return A_i = B_i S^{-1/2}
/// with S = sum B_i^* B_i, so stochasticity holds by construction.
KrausFamily random_valid_family(int dim, int branches, std::uint64_t seed);

/// Haar-ish random state (normalized complex Gaussian vector).
ProjectiveState random_state(int dim, RngStream& rng);

/// Random density matrix G G^* / tr(G G^*).
DensityMatrix random_density(int dim, RngStream& rng);

}  // namespace qtraj
