#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "oscgap/cohomology.hpp"
#include "oscgap/normalform.hpp"
#include "oscgap/spectral.hpp"

using namespace oscgap;

namespace {

const Complex I(0.0, 1.0);

WickSymbol coupling() { return WickSymbol::monomial({1, 0}, {0, 1}, 1.0) + WickSymbol::monomial({0, 1}, {1, 0}, 1.0); }
WickSymbol H1() { return WickSymbol::monomial({1, 0}, {1, 0}, 1.0); }

// Largest distance from an eigenvalue of one list to the nearest of the other, both ways.
double spectral_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  auto one_way = [](const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) {
    double worst = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) worst = std::max(worst, (y.array() - x(i)).abs().minCoeff());
    return worst;
  };
  return std::max(one_way(a, b), one_way(b, a));
}

FockOperator al2_small(double h, int N) {
  auto basis = make_basis(FockBasis::degree_cap(2, h, N, {1.0, 1.0}));
  const WickSymbol H = WickSymbol::harmonic({Complex(1.0), Complex(1.0)});
  return build_P(H, coupling(), H1(), h, h, basis);
}

}  // namespace

TEST_CASE("conjugate_operator: identity, unitary and general similarity") {
  const auto P = al2_small(0.2, 6);
  const WickSymbol zero(2);
  auto trivial = conjugate_operator(P, zero, zero);
  CHECK((trivial.Q.matrix - P.matrix).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(trivial.bound_holds);

  const auto specP = eigen_decompose(P.matrix, false).values;
  // number-conserving generators keep the degree-cap basis invariant
  const WickSymbol F1 = 0.7 * coupling() + 0.3 * H1() * H1();
  auto unitary = conjugate_operator(P, F1, zero);
  CHECK(std::abs(unitary.group_norm - 1.0) < 1e-10);
  CHECK(spectral_distance(specP, eigen_decompose(unitary.Q.matrix, false).values) < 1e-8);

  const WickSymbol F2 = 0.4 * coupling() + 0.2 * H1();
  auto general = conjugate_operator(P, F1, F2);
  CHECK(general.bound_holds);
  CHECK(general.group_norm > 1.0);
  CHECK(spectral_distance(specP, eigen_decompose(general.Q.matrix, false).values) < 1e-7);

  CHECK_THROWS_AS(conjugate_operator(P, I * coupling(), zero), DomainError);
}

TEST_CASE("conjugation_residual: resonant case vanishes and the nonresonant residual is O(hbar^2)") {
  const WickSymbol V = coupling();
  const WickSymbol A = H1();
  const WickSymbol zero(2);
  {
    auto w11 = FrequencyVector::parse({"1", "1"});
    auto m = resonance_module(w11);
    auto F = build_F12(A, V, w11, m);
    CHECK(F.F1.is_zero());
    CHECK(F.F2.is_zero());
    auto sweep = conjugation_residual({1.0, 1.0}, V, A, F.F1, F.F2, average(V, m), average(A, m), {0.2, 0.1, 0.05});
    for (const auto& row : sweep.rows) CHECK(row.residual_norm < 1e-12);
    CHECK_FALSE(sweep.fit_defined);
  }
  auto w12 = FrequencyVector::parse({"1", "2"});
  auto m12 = resonance_module(w12);
  auto F = build_F12(A, V, w12, m12);
  CHECK_FALSE(F.F1.is_zero());
  auto sweep =
      conjugation_residual({1.0, 2.0}, V, A, F.F1, F.F2, average(V, m12), average(A, m12), {0.2, 0.1, 0.05});
  REQUIRE(sweep.rows.size() == 3);
  for (const auto& row : sweep.rows) MESSAGE("hbar " << row.hbar << " residual " << row.residual_norm);
  MESSAGE("fitted power over 0.2..0.05: " << sweep.fitted_power);
  CHECK(sweep.fit_defined);
  CHECK(sweep.rows[1].residual_norm <= sweep.rows[0].residual_norm);
  CHECK(sweep.rows[2].residual_norm <= sweep.rows[1].residual_norm);
  // residual/ħ² = c₂ + c₃ħ + …: successive differences halve with ħ
  const double q0 = sweep.rows[0].residual_norm / 0.04, q1 = sweep.rows[1].residual_norm / 0.01,
               q2 = sweep.rows[2].residual_norm / 0.0025;
  CHECK((q1 - q0) / (q2 - q1) == doctest::Approx(2.0).epsilon(0.1));
  // asymptotic power on the finer sweep
  auto fine =
      conjugation_residual({1.0, 2.0}, V, A, F.F1, F.F2, average(V, m12), average(A, m12), {0.1, 0.05, 0.025});
  MESSAGE("fitted power over 0.1..0.025: " << fine.fitted_power);
  CHECK(fine.fitted_power >= 1.8);
  CHECK(fine.fitted_power <= 2.2);

  CHECK_THROWS_AS(conjugation_residual({1.0, 2.0}, V, A, F.F1, F.F2, zero, A, {0.2, 0.1}), DomainError);
  CHECK_THROWS_AS(loglog_slope({1, 2}, {1, 2}), DomainError);
  CHECK(loglog_slope({1, 2, 4}, {3, 12, 48}) == doctest::Approx(2.0));
}

TEST_CASE("psi_series: trivial cases, order comparison, smallness and group property") {
  std::mt19937_64 rng(11);
  const WickSymbol G = testing::random_wick(rng, 1, 3, 4);
  const WickSymbol a = testing::random_wick(rng, 1, 2, 3);
  CHECK((psi_series(G, a, 0.0, 0.1, 5).symbol - a).l1_norm() == 0.0);
  CHECK((psi_series(a, a, 0.7, 0.1, 5).symbol - a).l1_norm() < 1e-14);
  CHECK_THROWS_AS(psi_series(G, a, 0.1, 0.1, 0), DomainError);

  // d = 1 plane waves: G = cos x, a = e^{iξ}
  PlaneWaveSymbol Gp(1);
  Gp.add_term({1.0, 0.0}, 0.5);
  Gp.add_term({-1.0, 0.0}, 0.5);
  const PlaneWaveSymbol ap = PlaneWaveSymbol::wave({0.0, 1.0}, 1.0);
  const PlaneWaveNorms norms{1.0, 0.5};
  const double bound = 0.25 / (2.0 * norm_As(Gp, 1.0));
  const double t = 0.5 * bound;
  auto p12 = psi_series(Gp, ap, t, 0.1, 12, norms);
  auto p16 = psi_series(Gp, ap, t, 0.1, 16, norms);
  const double diff = norm_As(p16.symbol - p12.symbol, 0.5);
  MESSAGE("J=12 vs J=16 difference " << diff << ", tail " << p12.tail_indicator);
  CHECK(diff <= p12.tail_indicator);
  CHECK(p16.tail_indicator < p12.tail_indicator);
  CHECK_THROWS_AS(psi_series(Gp, ap, 1.01 * bound, 0.1, 12, norms), DomainError);
  CHECK((psi_series(Gp, ap, 0.0, 0.1, 4, norms).symbol - ap).l1_norm() == 0.0);

  // Ψ_{t+t'} = Ψ_t ∘ Ψ_{t'} up to the tails
  const double t1 = 0.2 * bound, t2 = 0.25 * bound;
  auto composed = psi_series(Gp, psi_series(Gp, ap, t2, 0.1, 12, norms).symbol, t1, 0.1, 12, norms);
  auto direct = psi_series(Gp, ap, t1 + t2, 0.1, 12, norms);
  const double gdiff = norm_As(composed.symbol - direct.symbol, 0.5);
  CHECK(gdiff <= std::max(composed.tail_indicator, direct.tail_indicator) + 1e-14);

  // Wick group property
  const WickSymbol n1 = WickSymbol::monomial({1}, {1}, 1.0);
  const WickSymbol Gw = n1 * n1;
  const WickSymbol aw = WickSymbol::zeta(1, 0);
  auto wc = psi_series(Gw, psi_series(Gw, aw, 0.05, 0.1, 10).symbol, 0.05, 0.1, 10);
  auto wd = psi_series(Gw, aw, 0.1, 0.1, 10);
  CHECK((wc.symbol - wd.symbol).l1_norm() <= std::max(wc.tail_indicator, wd.tail_indicator) + 1e-12);
}

TEST_CASE("egorov_check: commuting case, order convergence and plane-wave item bounds") {
  const double h = 0.1;
  auto basis = make_basis(FockBasis::degree_cap(1, h, 20, {1.0}));
  const WickSymbol n = WickSymbol::monomial({1}, {1}, 1.0);
  auto commuting = egorov_check(n, n * n, 0.4, h, basis, 6);
  CHECK(commuting.discrepancy <= 1e-10);

  const WickSymbol G = n * n;
  const WickSymbol a = WickSymbol::zeta(1, 0);
  auto r6 = egorov_check(G, a, 0.2, h, basis, 6);
  auto r12 = egorov_check(G, a, 0.2, h, basis, 12);
  MESSAGE("egorov discrepancy J=6 " << r6.discrepancy << ", J=12 " << r12.discrepancy);
  CHECK(r12.discrepancy < r6.discrepancy);
  CHECK(r12.discrepancy < 1e-6);
  CHECK(r6.interior_size == 19);
  CHECK_THROWS_AS(egorov_check(I * G, a, 0.2, h, basis, 6), DomainError);

  PlaneWaveSymbol Gp(1);
  Gp.add_term({1.0, 0.0}, 0.05);
  Gp.add_term({-1.0, 0.0}, 0.05);
  PlaneWaveSymbol ap(1);
  ap.add_term({0.0, 1.0}, 0.5);
  ap.add_term({0.0, -1.0}, 0.5);
  const PlaneWaveNorms norms{1.0, 0.5};
  std::vector<double> ts;
  for (int k = 1; k <= 10; ++k) ts.push_back(0.01 * k);
  auto items = egorov_items(Gp, ap, ts, h, 14, norms);
  for (const auto& row : items.rows)
    MESSAGE("t " << row.t << " item2 " << row.item2_ratio << " item3 " << row.item3_ratio);
  CHECK(items.bounded);
  CHECK(items.max_item2 < 10.0);
  CHECK(items.max_item3 < 10.0);
  // the item-3 quantity carries an O(t ħ²) piece, visible when ħ is not small against t
  auto rough = egorov_items(Gp, ap, ts, 0.5, 14, norms);
  CHECK(rough.rows.front().item3_ratio > rough.rows.back().item3_ratio);
}

TEST_CASE("commutator_vs_poisson_slope: exact low degree, cubic pair and plane waves") {
  const std::vector<double> hs{0.1, 0.05, 0.025};
  const ExactWickSymbol lin = ExactWickSymbol::zeta(1, 0) * GaussRational(3) + ExactWickSymbol::zeta_bar(1, 0);
  const ExactWickSymbol lin2 = ExactWickSymbol::zeta_bar(1, 0) * GaussRational(Rational(2), Rational(1));
  auto low = commutator_vs_poisson_slope(lin, lin2, hs);
  CHECK(low.exact);
  CHECK(low.note == "exact, slope undefined");

  const ExactWickSymbol a = ExactWickSymbol::monomial({2}, {1}, GaussRational(1));
  const ExactWickSymbol b = ExactWickSymbol::monomial({1}, {2}, GaussRational(1));
  auto ab = commutator_vs_poisson_slope(a, b, hs);
  auto ba = commutator_vs_poisson_slope(b, a, hs);
  MESSAGE("cubic slope " << ab.slope);
  CHECK_FALSE(ab.exact);
  CHECK(ab.slope == doctest::Approx(2.0).epsilon(0.025));
  CHECK(ba.slope == doctest::Approx(ab.slope).epsilon(1e-12));

  std::mt19937_64 rng(5);
  auto ra = testing::random_exact(rng, 2, 4, 5), rb = testing::random_exact(rng, 2, 4, 5);
  auto rnd = commutator_vs_poisson_slope(ra, rb, hs);
  if (!rnd.exact) CHECK(rnd.slope >= 1.9);

  PlaneWaveSymbol pa = PlaneWaveSymbol::wave({1.0, 0.0}, 1.0), pb = PlaneWaveSymbol::wave({0.0, 1.0}, 1.0);
  auto pw = commutator_vs_poisson_slope(pa, pb, hs, 0.5);
  MESSAGE("plane-wave slope " << pw.slope);
  CHECK(pw.slope == doctest::Approx(2.0).epsilon(0.025));
  CHECK_THROWS_AS(commutator_vs_poisson_slope(a, b, {0.1, 0.05}), DomainError);
}

TEST_CASE("effective_damping: trivial bracket, AL2 positivity and eps sweep") {
  const WickSymbol V = coupling();
  const WickSymbol A = H1();
  auto shell = sample_shell(std::vector<double>{1.0, 1.0}, 1.0, 41, 16);
  REQUIRE(shell.size() == 10016);

  const WickSymbol Htot = WickSymbol::harmonic({Complex(1.0), Complex(1.0)});
  auto trivial = effective_damping(A, Htot, A, 0.1, shell);
  CHECK((trivial.D - A).l1_norm() < 1e-14);
  CHECK(std::abs(trivial.shell_min) < 1e-12);
  CHECK_THROWS_AS(effective_damping(A, V, A, 0.0, shell), DomainError);

  auto F3 = build_F3(A, V, Complex(0.3), 8).F3;
  auto d = effective_damping(A, V, F3, 0.1, shell);
  MESSAGE("AL2 eps=0.1 shell min " << d.shell_min);
  CHECK(d.shell_min > 0.0);

  std::vector<double> eps;
  for (int k = 0; k <= 14; ++k) eps.push_back(0.02 + 0.02 * k);
  auto sweep = effective_damping_sweep(A, V, F3, eps, shell);
  MESSAGE("eps argmax " << sweep.best_eps << " min " << sweep.best_min << " certificate " << sweep.certificate);
  CHECK(sweep.positive);
  CHECK(sweep.best_eps > eps.front());
  for (const auto& row : sweep.rows) CHECK(row.shell_min <= sweep.best_min);
  CHECK(sweep.certificate == doctest::Approx(sweep.best_eps * sweep.best_min));
}
