#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qtraj/assumptions.hpp"
#include "qtraj/kernel.hpp"
#include "qtraj/reference.hpp"
#include "support.hpp"

using namespace qtraj;
using qtraj::testing::basic_config;
using qtraj::testing::brute_force_pi_power;

namespace {

// Seeded strongly contracting 2-Kraus family for the Poisson residual tests
// (kernel powers of the centered population decay by ~0.22 per level).
constexpr std::uint64_t kContractingSeed = 54;

PoissonSolution keep_switch_solution(const KeepSwitchModel& ks, const Observable& g,
                                     double tol = 1e-8) {
  KeepSwitchOracles oracle = keep_switch_oracles(ks, g);
  PoissonOptions opt;
  opt.tol = tol;
  opt.probes = {ks.atom_a, ks.atom_b, uniform_superposition(2)};
  return solve_poisson(ks.family, g, oracle.invariant_mean, 1, opt);
}

}  // namespace

TEST_CASE("apply_pi basics") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  Observable pop_a = Observable::population(2, 0);

  StateFunction constant = [](const ProjectiveState&) { return 2.5; };
  CHECK(apply_pi(ks.family, constant, uniform_superposition(2)) ==
        doctest::Approx(2.5).epsilon(1e-12));

  StateFunction g = [&](const ProjectiveState& x) { return pop_a(x); };
  CHECK(apply_pi(ks.family, g, ks.atom_a) == doctest::Approx(0.3).epsilon(1e-12));

  // Pi g at both atoms equals the invariant mean p g(e_a) + q g(e_b).
  RngStream rng(3, 0);
  for (int i = 0; i < 5; ++i) {
    double va = rng.uniform(), vb = rng.uniform();
    StateFunction h = [&](const ProjectiveState& x) {
      return va * pop_a(x) + vb * (1.0 - pop_a(x));
    };
    double target = 0.3 * va + 0.7 * vb;
    CHECK(apply_pi(ks.family, h, ks.atom_a) == doctest::Approx(target).epsilon(1e-12));
    CHECK(apply_pi(ks.family, h, ks.atom_b) == doctest::Approx(target).epsilon(1e-12));
  }
}

TEST_CASE("iterated kernel against brute-force word enumeration") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  Observable pop_a = Observable::population(2, 0);
  StateFunction g = [&](const ProjectiveState& x) { return pop_a(x); };

  IteratedPi at0 = iterate_pi(ks.family, g, uniform_superposition(2), 0, 0.0);
  CHECK(at0.value == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(at0.pruned_mass == 0.0);

  for (int k : {1, 2, 3}) {
    IteratedPi merged = iterate_pi(ks.family, g, ks.atom_a, k, 0.0);
    double brute = brute_force_pi_power(ks.family, g, ks.atom_a, k);
    CHECK(merged.value == doctest::Approx(brute).epsilon(1e-12));
  }

  KrausFamily generic = random_valid_family(2, 2, 11);
  RngStream rng(9, 0);
  ProjectiveState x = random_state(2, rng);
  for (int k : {1, 2, 4}) {
    IteratedPi merged = iterate_pi(generic, g, x, k, 0.0);
    double brute = brute_force_pi_power(generic, g, x, k);
    CHECK(merged.value == doctest::Approx(brute).epsilon(1e-10));
  }
}

TEST_CASE("pruning error stays within the reported mass") {
  KrausFamily generic = random_valid_family(2, 2, 11);
  Observable pop_a = Observable::population(2, 0);
  StateFunction g = [&](const ProjectiveState& x) { return pop_a(x); };
  RngStream rng(10, 0);
  ProjectiveState x = random_state(2, rng);
  IteratedPi exact = iterate_pi(generic, g, x, 10, 0.0);
  IteratedPi pruned = iterate_pi(generic, g, x, 10, 1e-12);
  CHECK(exact.pruned_mass == 0.0);
  CHECK(std::abs(exact.value - pruned.value) <= 1.0 * pruned.pruned_mass + 1e-15);
}

TEST_CASE("poisson solution hits the closed-form values at the atoms") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  Observable pop_a = Observable::population(2, 0);
  PoissonSolution sol = keep_switch_solution(ks, pop_a);

  double at_a = sol.evaluate(ks.atom_a);
  double at_b = sol.evaluate(ks.atom_b);
  // Gauge-free content: the difference and the residual equation.
  CHECK(at_a - at_b == doctest::Approx(1.0).epsilon(1e-10));
  double shift = at_a - 0.7;
  CHECK(at_b - (-0.3) == doctest::Approx(shift).epsilon(1e-9));

  CHECK(sol.diagnostics().exact_tail);
  CHECK(sol.diagnostics().residual_bound <= 1e-10);
}

TEST_CASE("constant observables solve trivially") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  Observable c = Observable::constant(2, 3.25);
  PoissonOptions opt;
  opt.probes = {ks.atom_a, ks.atom_b};
  PoissonSolution sol = solve_poisson(ks.family, c, 3.25, 1, opt);
  RngStream rng(8, 1);
  for (int i = 0; i < 5; ++i) {
    ProjectiveState x = random_state(2, rng);
    CHECK(std::abs(sol.evaluate(x)) <= 1e-12);
  }
  CHECK(sol.diagnostics().residual_bound <= 1e-12);
}

TEST_CASE("poisson residual self-consistency on a random contracting family") {
  KrausFamily family = random_valid_family(2, 2, kContractingSeed);
  REQUIRE(check_erg(family).holds);
  Observable pop_a = Observable::population(2, 0);

  // Invariant mean of a quadratic-form observable is tr(G rho_inv).
  DensityMatrix rho = compute_rho_inv(family);
  double mean = (pop_a.quadratic_form.value() * rho.matrix()).trace().real();

  PoissonOptions opt;
  opt.tol = 1e-4;
  PoissonSolution sol = solve_poisson(family, pop_a, mean, 1, opt);
  RngStream rng(21, 0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    ProjectiveState x = random_state(2, rng);
    double lhs = sol.evaluate(x) - sol.pi_evaluate(x);
    worst = std::max(worst, std::abs(lhs - sol.centered(x)));
  }
  CHECK(worst < 1e-3);
  CHECK(sol.diagnostics().block_ratio < 1.0);
  // The recorded bound certifies the defect at every evaluated state.
  CHECK(worst <= sol.diagnostics().residual_bound + 1e-12);
}

TEST_CASE("windowed h-averages are offset-uniform") {
  // Cesaro averages of the conditional variance along the chain agree across
  // window offsets within statistical error.
  KeepSwitchModel ks = build_keep_switch(0.3);
  Observable pop_a = Observable::population(2, 0);
  PoissonSolution sol = keep_switch_solution(ks, pop_a);

  TrajectoryConfig cfg = basic_config(ks.family, uniform_superposition(2), 0, 777);
  TrajectoryWalker walker(cfg);
  const long offsets[] = {0, 100, 10000};
  const long window = 100000;
  std::vector<double> means, errs;
  long position = 0;
  for (long offset : offsets) {
    while (position < offset) {
      walker.step();
      ++position;
    }
    double acc = 0.0, acc2 = 0.0;
    const int batches = 50;
    long batch_len = window / batches;
    double batch_acc = 0.0;
    std::vector<double> batch_means;
    for (long i = 0; i < window; ++i) {
      double h = sol.conditional_variance(walker.state());
      acc += h;
      batch_acc += h;
      if ((i + 1) % batch_len == 0) {
        batch_means.push_back(batch_acc / static_cast<double>(batch_len));
        batch_acc = 0.0;
      }
      walker.step();
      ++position;
    }
    (void)acc2;
    double mean = acc / static_cast<double>(window);
    double bm = 0.0;
    for (double b : batch_means) bm += b;
    bm /= static_cast<double>(batch_means.size());
    double var = 0.0;
    for (double b : batch_means) var += (b - bm) * (b - bm);
    var /= static_cast<double>(batch_means.size() - 1);
    means.push_back(mean);
    errs.push_back(std::sqrt(var / static_cast<double>(batch_means.size())));
  }
  for (std::size_t i = 1; i < means.size(); ++i) {
    CHECK(std::abs(means[i] - means[0]) <= 4.0 * (errs[i] + errs[0]) + 1e-6);
  }
}

TEST_CASE("independently solved gauges differ by a constant") {
  KrausFamily family = random_valid_family(2, 2, kContractingSeed);
  DensityMatrix rho = compute_rho_inv(family);
  Observable pop_a = Observable::population(2, 0);
  double mean = (pop_a.quadratic_form.value() * rho.matrix()).trace().real();

  PoissonOptions opt1, opt2;
  opt1.tol = opt2.tol = 1e-7;
  opt1.probe_seed = 1111;
  opt2.probe_seed = 2222;
  PoissonSolution s1 = solve_poisson(family, pop_a, mean, 1, opt1);
  PoissonSolution s2 = solve_poisson(family, pop_a, mean, 1, opt2);

  RngStream rng(22, 0);
  std::vector<double> diffs;
  for (int i = 0; i < 50; ++i) {
    ProjectiveState x = random_state(2, rng);
    diffs.push_back(s1.evaluate(x) - s2.evaluate(x));
  }
  double mean_diff = 0.0;
  for (double d : diffs) mean_diff += d;
  mean_diff /= static_cast<double>(diffs.size());
  double var = 0.0;
  for (double d : diffs) var += (d - mean_diff) * (d - mean_diff);
  var /= static_cast<double>(diffs.size());
  CHECK(var <= 1e-6);
}

TEST_CASE("conditional variance h") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  Observable pop_a = Observable::population(2, 0);
  PoissonSolution sol = keep_switch_solution(ks, pop_a);

  // Two-point conditional variance at the atom: p q (gt(a) - gt(b))^2 = pq.
  CHECK(sol.conditional_variance(ks.atom_a) == doctest::Approx(0.21).epsilon(1e-12));
  CHECK(sol.conditional_variance(ks.atom_b) == doctest::Approx(0.21).epsilon(1e-12));

  Observable c = Observable::constant(2, 1.0);
  PoissonOptions opt;
  opt.probes = {ks.atom_a};
  PoissonSolution cs = solve_poisson(ks.family, c, 1.0, 1, opt);
  CHECK(cs.conditional_variance(uniform_superposition(2)) == 0.0);

  RngStream rng(23, 0);
  for (int i = 0; i < 10; ++i) {
    CHECK(sol.conditional_variance(random_state(2, rng)) >= 0.0);
  }
}

TEST_CASE("asymptotic variance: exact atoms vs ergodic average") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  Observable pop_a = Observable::population(2, 0);
  PoissonSolution sol = keep_switch_solution(ks, pop_a);
  KeepSwitchOracles oracle = keep_switch_oracles(ks, pop_a);

  VarianceEstimate atoms = gamma_sq_from_atoms(sol, oracle.invariant_atoms);
  CHECK(atoms.gamma_sq == doctest::Approx(0.21).epsilon(1e-12));
  CHECK(atoms.gamma_sq == doctest::Approx(oracle.gamma_sq).epsilon(1e-12));

  TrajectoryConfig cfg = basic_config(ks.family, uniform_superposition(2), 0, 606);
  VarianceEstimate ergodic = gamma_sq_ergodic(sol, cfg, 200000);
  CHECK(std::abs(ergodic.gamma_sq - atoms.gamma_sq) <= 3.0 * ergodic.std_error + 1e-4);
}

TEST_CASE("ergodic variance is insensitive to the initial state") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  Observable pop_a = Observable::population(2, 0);
  PoissonSolution sol = keep_switch_solution(ks, pop_a);
  std::vector<double> estimates;
  std::vector<double> errs;
  Vector tilted(2);
  tilted << 0.8, Cplx(0.0, 0.6);
  for (const ProjectiveState& start :
       {uniform_superposition(2), ks.atom_a, ProjectiveState(tilted)}) {
    TrajectoryConfig cfg = basic_config(ks.family, start, 0, 607);
    VarianceEstimate est = gamma_sq_ergodic(sol, cfg, 100000);
    estimates.push_back(est.gamma_sq);
    errs.push_back(est.std_error);
  }
  for (std::size_t i = 1; i < estimates.size(); ++i) {
    CHECK(std::abs(estimates[i] - estimates[0]) <= 4.0 * (errs[i] + errs[0]));
  }
}

TEST_CASE("martingale decomposition telescopes") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  Observable pop_a = Observable::population(2, 0);
  PoissonSolution sol = keep_switch_solution(ks, pop_a);

  TrajectoryConfig cfg = basic_config(ks.family, uniform_superposition(2), 2000, 512);
  TrajectoryPath path = sample_trajectory(cfg);
  MartingaleDecomposition dec = martingale_path(sol, path);
  CHECK(dec.martingale[0] == 0.0);
  CHECK(dec.max_telescoping_residual <= 1e-8);

  double osc = oscillation_over(sol, random_probe_states(2, 1000, 515));
  double sup = 0.0;
  for (std::size_t k = 0; k < dec.partial_sums.size(); ++k) {
    sup = std::max(sup, std::abs(dec.partial_sums[k] - dec.martingale[k]));
  }
  CHECK(sup <= osc + 1e-6);
}

TEST_CASE("martingale increments are centered") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  Observable pop_a = Observable::population(2, 0);
  PoissonSolution sol = keep_switch_solution(ks, pop_a);
  const int reps = 2000;
  const int fixed_k = 5;
  double acc = 0.0;
  for (int r = 0; r < reps; ++r) {
    TrajectoryConfig cfg = basic_config(ks.family, uniform_superposition(2), fixed_k, 901,
                                        static_cast<std::uint64_t>(r));
    TrajectoryPath path = sample_trajectory(cfg);
    MartingaleDecomposition dec = martingale_path(sol, path);
    acc += dec.martingale[fixed_k] - dec.martingale[fixed_k - 1];
  }
  CHECK(std::abs(acc / reps) <= 4.0 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("kernel output is continuity-scaled for nearby states") {
  KrausFamily family = random_valid_family(2, 2, kContractingSeed);
  Observable pop_a = Observable::population(2, 0);
  StateFunction g = [&](const ProjectiveState& x) { return pop_a(x); };
  RngStream rng(24, 0);

  auto perturbed = [&](const ProjectiveState& x, double eps) {
    Vector v = x.representative();
    Vector noise(2);
    noise << Cplx(rng.gaussian(), rng.gaussian()), Cplx(rng.gaussian(), rng.gaussian());
    return ProjectiveState(v + eps * noise);
  };

  // Calibrate the Lipschitz-like ratio at moderate separations.
  double calibration = 0.0;
  for (int i = 0; i < 40; ++i) {
    ProjectiveState x = random_state(2, rng);
    ProjectiveState y = perturbed(x, 1e-2);
    double d = metric_distance(x, y);
    if (d < 1e-6) continue;
    calibration = std::max(calibration,
                           std::abs(apply_pi(family, g, x) - apply_pi(family, g, y)) / d);
  }
  for (int i = 0; i < 40; ++i) {
    ProjectiveState x = random_state(2, rng);
    ProjectiveState y = perturbed(x, 1e-4);
    double d = metric_distance(x, y);
    if (d < 1e-9 || d >= 1e-4) continue;
    double ratio = std::abs(apply_pi(family, g, x) - apply_pi(family, g, y)) / d;
    CHECK(ratio <= 3.0 * calibration + 1.0);
  }
}

TEST_CASE("non-decaying dynamics is rejected") {
  // The identity family fixes every state, so Pi^k gbar never decays for a
  // non-constant centered observable.
  KrausFamily id;
  id.dim = 2;
  id.operators = {Matrix::Identity(2, 2)};
  Observable pop_a = Observable::population(2, 0);
  PoissonOptions opt;
  opt.tol = 1e-6;
  opt.max_blocks = 30;
  CHECK_THROWS_AS(solve_poisson(id, pop_a, 0.5, 1, opt), NoConvergenceError);
}
