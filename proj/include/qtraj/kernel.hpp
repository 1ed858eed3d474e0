#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "qtraj/observable.hpp"
#include "qtraj/trajectory.hpp"

namespace qtraj {

using StateFunction = std::function<double(const ProjectiveState&)>;

/// One application of the transition kernel:
/// (Pi f)(x) = sum_i ||A_i x||^2 f(A_i . x), null branches skipped.
double apply_pi(const KrausFamily& family, const StateFunction& f, const ProjectiveState& x);

struct IteratedPi {
  double value = 0.0;
  double pruned_mass = 0.0;  // |exact - value| <= sup|f| * pruned_mass
};

/// (Pi^k f)(x) through a depth-k branch tree. Nodes at the same level whose
/// canonical states coincide are merged, which keeps the tree tiny whenever
/// the dynamics revisits states; subtrees of cumulative weight below
/// `prune_eps` are abandoned and their mass reported.
IteratedPi iterate_pi(const KrausFamily& family, const StateFunction& f, const ProjectiveState& x,
                      int k, double prune_eps);

/// All of (Pi^k f)(x) for k = 0..depth from a single tree walk.
struct PiIterateSequence {
  std::vector<double> values;
  double pruned_mass = 0.0;
};
PiIterateSequence pi_iterate_sequence(const KrausFamily& family, const StateFunction& f,
                                      const ProjectiveState& x, int depth, double prune_eps);

struct PoissonOptions {
  double tol = 1e-6;
  double prune_eps = 1e-12;
  int max_blocks = 200;
  int probe_count = 16;           // random gauge/stopping probes
  std::uint64_t probe_seed = 424242;
  std::vector<ProjectiveState> probes;  // extra probes (atoms, path states, ...)
};

struct PoissonDiagnostics {
  int blocks = 0;          // truncation depth N in Cesaro blocks
  int levels = 0;          // kernel powers evaluated per state
  int period = 1;
  double tol = 0.0;
  double gauge = 0.0;      // additive constant fixed by the probe set
  double residual_bound = 0.0;      // certified cap, max over evaluated states
  double block_ratio = 0.0;         // fitted geometric decay of block sums
  double max_pruned_mass = 0.0;
  bool exact_tail = false;          // block sums hit exactly zero
};

/// Lazily evaluable solution of (Id - Pi) gtilde = g - mean. Evaluations are
/// memoized on canonical states; the cache never changes values, only cost,
/// so results are identical whatever the evaluation order or thread count.
class PoissonSolution {
 public:
  double evaluate(const ProjectiveState& x) const;      // gtilde (gauge-fixed)
  double pi_evaluate(const ProjectiveState& x) const;   // Pi gtilde
  double conditional_variance(const ProjectiveState& x) const;  // h >= 0
  double centered(const ProjectiveState& x) const;      // g - mean

  double centered_raw(const Cplx* components, int dim) const;

  double invariant_mean() const;
  const Observable& observable() const;
  const KrausFamily& family() const;
  PoissonDiagnostics diagnostics() const;

 private:
  friend PoissonSolution solve_poisson(const KrausFamily&, const Observable&, double, int,
                                       const PoissonOptions&);
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// Builds the truncated Cesaro solution, choosing the depth adaptively: stop
/// once the latest block sum over the probe states and the geometric tail
/// extrapolation both drop under tol/2. Throws NoConvergenceError when block
/// sums refuse to decay within max_blocks.
PoissonSolution solve_poisson(const KrausFamily& family, const Observable& g,
                              double invariant_mean, int period_m,
                              const PoissonOptions& options = {});

enum class VarianceMethod { atoms_exact, ergodic_h };

struct VarianceEstimate {
  double gamma_sq = 0.0;
  VarianceMethod method = VarianceMethod::atoms_exact;
  long n_samples = 0;
  double std_error = 0.0;
};

/// gamma^2 = sum_atoms weight * h(atom); exact when the atoms carry the
/// invariant measure.
VarianceEstimate gamma_sq_from_atoms(const PoissonSolution& solution,
                                     const std::vector<std::pair<ProjectiveState, double>>& atoms);

/// gamma^2 = (1/n) sum h(x_k) along a sampled trajectory, standard error from
/// batch means.
VarianceEstimate gamma_sq_ergodic(const PoissonSolution& solution, const TrajectoryConfig& cfg,
                                  long n);

struct MartingaleDecomposition {
  std::vector<double> partial_sums;  // S_0..S_n of the centered observable
  std::vector<double> martingale;    // M_0..M_n
  double max_telescoping_residual = 0.0;  // |S_n - M_n - (gt(x_0)-gt(x_n))|
};

MartingaleDecomposition martingale_path(const PoissonSolution& solution,
                                        const TrajectoryPath& path);

/// max - min of gtilde over a set of states.
double oscillation_over(const PoissonSolution& solution,
                        const std::vector<ProjectiveState>& states);

/// Deterministic batch of random probe states.
std::vector<ProjectiveState> random_probe_states(int dim, int count, std::uint64_t seed);

}  // namespace qtraj
