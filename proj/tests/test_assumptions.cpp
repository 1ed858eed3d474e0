#include <doctest.h>

#include <cmath>

#include "qtraj/assumptions.hpp"
#include "qtraj/reference.hpp"
#include "support.hpp"

using namespace qtraj;

namespace {

const NamedControl& control(const std::vector<NamedControl>& list, const std::string& name) {
  for (const NamedControl& c : list) {
    if (c.name == name) return c;
  }
  throw std::runtime_error("missing control " + name);
}

}  // namespace

TEST_CASE("rho_inv: keep-switch fixed point and degenerate failures") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  DensityMatrix rho = compute_rho_inv(ks.family);
  Matrix oracle(2, 2);
  oracle << 0.3, 0.0, 0.0, 0.7;
  CHECK(sup_norm(rho.matrix() - oracle) <= 1e-9);

  auto controls = negative_controls();
  CHECK_THROWS_AS(compute_rho_inv(control(controls, "identity").family),
                  NonUniqueFixedPointError);
  CHECK_THROWS_AS(compute_rho_inv(control(controls, "single_unitary").family),
                  NonUniqueFixedPointError);
}

TEST_CASE("erg checker") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  ErgResult erg = check_erg(ks.family);
  CHECK(erg.holds);
  CHECK(erg.minimal_subspace_dim == 2);

  auto controls = negative_controls();
  CHECK_FALSE(check_erg(control(controls, "identity").family).holds);
  CHECK_FALSE(check_erg(control(controls, "block_reducible").family).holds);
  CHECK(check_erg(control(controls, "two_cycle").family).holds);
  CHECK(check_erg(control(controls, "two_cycle").family).minimal_subspace_dim == 2);
}

TEST_CASE("pur checker on the worked examples") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  PurResult pur = check_pur(ks.family);
  CHECK(pur.status == PurStatus::yes);
  REQUIRE(pur.witness_word.has_value());
  CHECK(pur.witness_word->letters == std::vector<int>{0});  // A_1^*A_1 = diag(p,q)

  auto controls = negative_controls();
  PurResult id_pur = check_pur(control(controls, "identity").family);
  CHECK(id_pur.status == PurStatus::no);
  REQUIRE(id_pur.witness_projector.has_value());
  CHECK(sup_norm(*id_pur.witness_projector - Matrix::Identity(2, 2)) <= 1e-12);

  CHECK(check_pur(control(controls, "single_unitary").family).status == PurStatus::no);
  CHECK(check_pur(control(controls, "block_reducible").family).status == PurStatus::yes);
  CHECK(check_pur(control(controls, "two_cycle").family).status == PurStatus::yes);
}

TEST_CASE("pur checker is exact for d=2 against word enumeration") {
  using qtraj::testing::all_words;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    KrausFamily family = random_valid_family(2, 2, seed);
    bool brute_yes = false;
    for (int len = 1; len <= 3 && !brute_yes; ++len) {
      for (const Word& w : all_words(2, len)) {
        auto sm = word_product(family, w);
        Matrix t = sm.matrix.adjoint() * sm.matrix;
        Matrix dev = t - (t.trace() / 2.0) * Matrix::Identity(2, 2);
        if (sup_norm(dev) > 1e-9 * std::max(1.0, sup_norm(t))) {
          brute_yes = true;
          break;
        }
      }
    }
    PurResult pur = check_pur(family, 3);
    REQUIRE(pur.status != PurStatus::unknown);
    CHECK((pur.status == PurStatus::yes) == brute_yes);
  }
}

TEST_CASE("pur checker in dimension three") {
  // A single 3x3 unitary: every word operator is the identity.
  Matrix u(3, 3);
  u.setZero();
  u(0, 1) = 1.0;
  u(1, 2) = 1.0;
  u(2, 0) = 1.0;
  KrausFamily cycle;
  cycle.dim = 3;
  cycle.operators = {u};
  CHECK(check_pur(cycle).status == PurStatus::no);

  KrausFamily generic = random_valid_family(3, 2, 2718);
  CHECK(check_pur(generic).status == PurStatus::yes);
}

TEST_CASE("period estimation and peripheral roots of unity") {
  KeepSwitchModel ks = build_keep_switch(0.3);
  CHECK(estimate_period(ks.family) == 1);

  auto controls = negative_controls();
  CHECK(estimate_period(control(controls, "two_cycle").family) == 2);
  CHECK_THROWS_AS(estimate_period(control(controls, "identity").family), PreconditionError);

  // Every peripheral eigenvalue is an m-th root of unity.
  for (const KrausFamily& family :
       {ks.family, control(controls, "two_cycle").family, random_valid_family(2, 2, 4242)}) {
    if (!check_erg(family).holds) continue;
    int m = estimate_period(family);
    ChannelSpectrum spec = channel_spectrum(family);
    for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
      Cplx lam = spec.eigenvalues(i);
      if (std::abs(lam) >= 1.0 - kSpectralTol) {
        CHECK(std::abs(std::pow(lam, m) - Cplx(1.0, 0.0)) <= 1e-6);
      }
    }
  }
}

TEST_CASE("fixed point residual invariant") {
  for (std::uint64_t seed : {3ull, 14ull, 159ull}) {
    KrausFamily family = random_valid_family(3, 3, seed);
    if (!check_erg(family).holds) continue;
    DensityMatrix rho = compute_rho_inv(family);
    DensityMatrix moved = channel_apply(family, rho);
    CHECK(operator_norm(moved.matrix() - rho.matrix()) <= 1e-9);
  }
}
