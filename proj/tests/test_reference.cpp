#include <doctest.h>

#include <cmath>

#include "qtraj/assumptions.hpp"
#include "qtraj/reference.hpp"
#include "support.hpp"

using namespace qtraj;

TEST_CASE("keep-switch construction") {
  KeepSwitchModel ks = build_keep_switch(0.25);
  CHECK(ks.family.op(0)(0, 0).real() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ks.family.op(0)(1, 1).real() == doctest::Approx(std::sqrt(0.75)).epsilon(1e-15));
  CHECK(validate_stochasticity(ks.family).pass);

  CHECK_THROWS_AS(build_keep_switch(0.5), StructuralError);
  CHECK_THROWS_AS(build_keep_switch(0.0), StructuralError);
  CHECK_THROWS_AS(build_keep_switch(0.7), StructuralError);
}

TEST_CASE("closed-form oracles") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  Observable pop_a = Observable::population(2, 0);
  KeepSwitchOracles o = keep_switch_oracles(ks, pop_a);
  CHECK(o.invariant_mean == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(o.gamma_sq == doctest::Approx(0.21).epsilon(1e-15));
  CHECK(o.gtilde_a == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(o.gtilde_b == doctest::Approx(-0.3).epsilon(1e-15));

  Observable c = Observable::constant(2, 4.0);
  CHECK(keep_switch_oracles(ks, c).gamma_sq == doctest::Approx(0.0).epsilon(1e-12));

  // Swapping the coordinate gives the same variance by symmetry of pq.
  Observable pop_b = Observable::population(2, 1);
  CHECK(keep_switch_oracles(ks, pop_b).gamma_sq == doctest::Approx(0.21).epsilon(1e-15));
}

TEST_CASE("negative controls behave as labelled") {
  for (const NamedControl& control : negative_controls()) {
    CAPTURE(control.name);
    CHECK(validate_stochasticity(control.family).pass);
    ErgResult erg = check_erg(control.family);
    CHECK(erg.holds == control.expect_erg);
    PurResult pur = check_pur(control.family);
    CHECK((pur.status == PurStatus::yes) == control.expect_pur);
    CHECK(pur.status != PurStatus::unknown);
    if (control.expect_erg) {
      CHECK(estimate_period(control.family) == control.expect_period);
    }
  }
}

TEST_CASE("random valid families") {
  KrausFamily f1 = random_valid_family(2, 2, 99);
  KrausFamily f2 = random_valid_family(2, 2, 99);
  CHECK(validate_stochasticity(f1).residual <= 1e-10);
  for (std::size_t k = 0; k < f1.operators.size(); ++k) {
    CHECK(sup_norm(f1.operators[k] - f2.operators[k]) == 0.0);
  }

  KrausFamily f3 = random_valid_family(3, 4, 7);
  CHECK(validate_stochasticity(f3).pass);

  int both = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    KrausFamily f = random_valid_family(2, 2, 5000 + static_cast<std::uint64_t>(s));
    if (check_erg(f).holds && check_pur(f).status == PurStatus::yes) ++both;
  }
  MESSAGE("random 2x2 families passing (Erg)+(Pur): ", both, "/", seeds);
  CHECK(both > seeds / 2);
}

TEST_CASE("non-contraction identity at the atoms") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  auto moved_a1 = apply_kraus(ks.family.op(0), ks.atom_a);
  auto moved_b1 = apply_kraus(ks.family.op(0), ks.atom_b);
  auto moved_a2 = apply_kraus(ks.family.op(1), ks.atom_a);
  auto moved_b2 = apply_kraus(ks.family.op(1), ks.atom_b);
  // Branch weights from e_a are (p, q); both branches preserve the unit
  // separation, so the expected contraction factor is exactly one.
  double ratio = moved_a1.weight * metric_distance(moved_a1.state, moved_b1.state) +
                 moved_a2.weight * metric_distance(moved_a2.state, moved_b2.state);
  CHECK(ratio == 1.0);
}

TEST_CASE("orbit walker never reaches the atoms in ten thousand steps") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  KeepSwitchOrbitWalker walker(ks, 0.0);
  RngStream rng(404, 2);
  double min_log_overlap = 0.0;
  for (int n = 0; n < 10000; ++n) {
    CHECK_FALSE(walker.at_atom());
    min_log_overlap = std::min(min_log_overlap, walker.log_overlap_a());
    walker.step(rng);
  }
  CHECK(std::isfinite(min_log_overlap));  // |<e_a, x_n>| stayed positive
  MESSAGE("min log |<e_a,x_n>| over 1e4 steps: ", min_log_overlap);
}

TEST_CASE("orbit walker matches the generic sampler while both are representable") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  KeepSwitchOrbitWalker orbit(ks, 0.0);
  ProjectiveState state = uniform_superposition(2);
  RngStream rng(11, 7);
  for (int n = 0; n < 200; ++n) {
    // Drive the generic branch arithmetic with the orbit walker's choices.
    double pa_orbit = orbit.population_a();
    double pa_state = std::norm(state.component(0));
    CHECK(pa_orbit == doctest::Approx(pa_state).epsilon(1e-9));
    int branch = orbit.step(rng);
    state = apply_kraus(ks.family.op(branch), state).state;
  }
}
