#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "oscgap/cohomology.hpp"
#include "oscgap/control.hpp"

using namespace oscgap;
using namespace testing;

namespace {

using GR = GaussRational;

ExactWickSymbol H_of(const FrequencyVector& omega) { return ExactWickSymbol::harmonic(exact_omega(omega)); }

ExactWickSymbol coupling() {
  return ExactWickSymbol::monomial({1, 0}, {0, 1}, 1) + ExactWickSymbol::monomial({0, 1}, {1, 0}, 1);
}

ExactWickSymbol real_part(const ExactWickSymbol& a) { return (a + a.conj()) * GR(Rational(1, 2)); }

}  // namespace

TEST_CASE("cohomological equation is solved exactly") {
  std::mt19937_64 rng(101);
  for (const char* w : {"1 1", "1 2", "2 3"}) {
    std::vector<std::string> parts;
    std::istringstream is(w);
    for (std::string x; is >> x;) parts.push_back(x);
    auto omega = FrequencyVector::parse(parts);
    auto module = resonance_module(omega);
    auto H = H_of(omega);
    for (int i = 0; i < 34; ++i) {
      auto g = random_exact(rng, 2, 4, 6);
      auto sol = solve_cohomological(g, omega, module);
      CHECK(sol.residual.is_zero());
      CHECK((poisson(H, sol.f) - (g - average(g, module))).is_zero());
      CHECK(average(sol.f, module).is_zero());
      if (!sol.f.is_zero()) CHECK(sol.smallest_denominator >= 1.0 / to_double(Rational(omega.denominator_lcm())) - 1e-15);
      // gauge freedom: resonant additions keep the identity
      auto r = average(random_exact(rng, 2, 4, 4), module);
      for (int lambda : {-1, 1, 2}) {
        auto f2 = sol.f + r;
        auto shifted = f2 + average(f2, module) * GR(lambda);
        CHECK((poisson(H, shifted) - (g - average(g, module))).is_zero());
      }
    }
  }
}

TEST_CASE("solver examples") {
  auto w12 = FrequencyVector::parse({"1", "2"});
  auto m12 = resonance_module(w12);
  auto sol = solve_cohomological(coupling(), w12, m12);
  auto expect = ExactWickSymbol::monomial({1, 0}, {0, 1}, GR(0, -1)) + ExactWickSymbol::monomial({0, 1}, {1, 0}, GR(0, 1));
  CHECK(sol.f == expect);
  CHECK((poisson(H_of(w12), sol.f) - coupling()).is_zero());
  CHECK(sol.smallest_denominator == doctest::Approx(1.0));

  auto w11 = FrequencyVector::parse({"1", "1"});
  CHECK(solve_cohomological(coupling(), w11, resonance_module(w11)).f.is_zero());
  CHECK_THROWS_AS(solve_cohomological(coupling(), FrequencyVector::approximate({1.0, 2.0}), m12), DomainError);

  // floating-point instance agrees with the exact one
  auto fsol = solve_cohomological(to_floating(coupling()), w12, m12);
  CHECK((fsol.f - to_floating(expect)).l1_norm() < 1e-15);
}

TEST_CASE("periodic formula matches the Fourier solver") {
  auto w11 = FrequencyVector::parse({"1", "1"});
  auto m11 = resonance_module(w11);
  // g = ζ₁²ζ̄₁ + ζ₁ζ̄₂ minus its average
  auto g = ExactWickSymbol::monomial({2, 0}, {1, 0}, 1) + ExactWickSymbol::monomial({1, 0}, {0, 1}, 1);
  g -= average(g, m11);
  CHECK(periodic_solution(g, w11) == solve_cohomological(g, w11, m11).f);
  CHECK(periodic_solution(g, w11).is_zero() == false);

  auto w1 = FrequencyVector::parse({"1"});
  auto g1 = ExactWickSymbol::monomial({2}, {0}, 1) + ExactWickSymbol::monomial({0}, {2}, 1);
  CHECK(periodic_solution(g1, w1) == solve_cohomological(g1, w1, resonance_module(w1)).f);

  auto inv = ExactWickSymbol::monomial({1, 1}, {1, 1}, 3);
  CHECK(periodic_solution(inv, w11).is_zero());

  auto w22 = FrequencyVector::parse({"2", "2"});
  std::mt19937_64 rng(103);
  for (int i = 0; i < 20; ++i) {
    auto r = random_exact(rng, 2, 4, 6);
    CHECK(periodic_solution(r, w11) == solve_cohomological(r, w11, m11).f);
    CHECK(periodic_solution(r, w22) == solve_cohomological(r, w22, resonance_module(w22)).f);
  }
  CHECK_THROWS_AS(periodic_solution(g, FrequencyVector::parse({"1", "2"})), DomainError);

  // numerical oracle: f = −(1/2π)∫₀^{2π}∫₀^t g∘φ_s ds dt by nested quadrature
  auto fg = to_floating(g);
  auto f = to_floating(periodic_solution(g, w11));
  PhasePoint z({0.3, -0.4, 0.8, 0.1});
  const int n = 400;
  const double T = 2 * std::numbers::pi, h = T / n;
  Complex outer{};
  Complex inner{};
  std::vector<Complex> vals(n + 1);
  for (int k = 0; k <= n; ++k) vals[k] = fg.eval(rotate_point(z, {k * h, k * h}));
  // cumulative trapezoid for the inner integral, then trapezoid for the outer
  std::vector<Complex> I(n + 1);
  for (int k = 1; k <= n; ++k) {
    inner += 0.5 * h * (vals[k - 1] + vals[k]);
    I[k] = inner;
  }
  for (int k = 1; k <= n; ++k) outer += 0.5 * h * (I[k - 1] + I[k]);
  CHECK(std::abs(-outer / T - f.eval(z)) < 1e-4);
}

TEST_CASE("F1 and F2") {
  auto w12 = FrequencyVector::parse({"1", "2"});
  auto m12 = resonance_module(w12);
  auto A = ExactWickSymbol::monomial({1, 0}, {1, 0}, 1);
  auto V = coupling();
  auto [F1, F2] = build_F12(A, V, w12, m12);
  auto H = H_of(w12);
  CHECK(F1.is_real());
  CHECK(F2.is_zero());
  CHECK((poisson(F1, H) + V - average(V, m12)).is_zero());
  CHECK(average(V, m12).is_zero());

  auto w11 = FrequencyVector::parse({"1", "1"});
  auto [G1, G2] = build_F12(A, V, w11, resonance_module(w11));
  CHECK(G1.is_zero());
  CHECK(G2.is_zero());

  std::mt19937_64 rng(107);
  for (int i = 0; i < 20; ++i) {
    auto a = real_part(random_exact(rng, 2, 4, 5)), v = real_part(random_exact(rng, 2, 4, 5));
    auto [f1, f2] = build_F12(a, v, w12, m12);
    CHECK(f1.is_real());
    CHECK(f2.is_real());
    CHECK((poisson(f1, H) + v - average(v, m12)).is_zero());
    CHECK((poisson(f2, H) + a - average(a, m12)).is_zero());
  }
  CHECK_THROWS_AS(build_F12(ExactWickSymbol::zeta(2, 0), V, w12, m12), DomainError);
}

TEST_CASE("F3 bracket series") {
  const GR t0(Rational(3, 10));
  auto A = ExactWickSymbol::monomial({1, 0}, {1, 0}, 1);
  auto V = coupling();
  auto omega = exact_omega(FrequencyVector::parse({"1", "1"}));

  // invariant ⟨A⟩: only j = 0 survives
  auto inv = build_F3(A, ExactWickSymbol::monomial({1, 0}, {1, 0}, 2), t0, 6, omega);
  CHECK(inv.F3 == A * (t0 * t0 * GR(Rational(1, 2))));
  CHECK(inv.tail_indicator == 0.0);

  auto r6 = build_F3(A, V, t0, 6, omega), r8 = build_F3(A, V, t0, 8, omega);
  CHECK(r8.h_invariant);
  CHECK(r8.F3.is_real());
  CHECK_FALSE(r8.warning.has_value());
  for (const auto& [k, c] : r8.F3.terms()) {
    const auto c6 = r6.F3.coefficient(std::vector<int>(k.begin(), k.begin() + 2), std::vector<int>(k.begin() + 2, k.end()));
    CHECK(ScalarOps<GR>::magnitude(c - c6) <= 1e-6 * ScalarOps<GR>::magnitude(c));
  }
  CHECK(r8.tail_indicator < r6.tail_indicator);
  CHECK(average(r8.F3, resonance_module(FrequencyVector::parse({"1", "1"}))) == r8.F3);

  // closed form: the ⟨V⟩ flow rotates (ζ₁, ζ₂) so that ⟨A⟩∘φ_τ = |cos τ ζ₁ − i sin τ ζ₂|²;
  // compare F₃ with the double time integral evaluated by quadrature
  auto f3 = to_floating(r8.F3);
  auto a = to_floating(A);
  auto v = to_floating(V);
  PhasePoint z({0.4, 0.2, -0.5, 0.7});
  const int n = 2000;
  const double T = 0.3, h = T / n;
  // integrate ∫₀^T (T − τ) ⟨A⟩∘φ_τ dτ
  Complex acc{};
  for (int k = 0; k <= n; ++k) {
    const double tau = k * h;
    const Complex z1 = z.zeta(0), z2 = z.zeta(1);
    const Complex w1 = std::cos(tau) * z1 - Complex(0, 1) * std::sin(tau) * z2;
    const double val = std::norm(w1);
    const double wgt = (k == 0 || k == n) ? 0.5 : 1.0;
    acc += wgt * h * (T - tau) * val;
  }
  CHECK(std::abs(f3.eval(z) - acc) < 1e-8);
  // the closed-form flow really is the ⟨V⟩ flow: d/dτ ⟨A⟩∘φ_τ at 0 equals {V, A}
  const Complex z1 = z.zeta(0), z2 = z.zeta(1);
  const double eps = 1e-6;
  const double dA = (std::norm(std::cos(eps) * z1 - Complex(0, 1) * std::sin(eps) * z2) -
                     std::norm(std::cos(-eps) * z1 - Complex(0, 1) * std::sin(-eps) * z2)) /
                    (2 * eps);
  CHECK(std::abs(poisson(v, a).eval(z).real() - dA) < 1e-8);

  // {⟨V⟩, F₃} > 0 on the zero torus ζ₁ = 0
  auto bracket = to_floating(poisson(V, r8.F3));
  auto shell = sample_shell(FrequencyVector::parse({"1", "1"}), 1.0, 11, 16);
  int on_torus = 0;
  for (const auto& p : shell.points) {
    if (std::norm(p.zeta(0)) > 1e-14) continue;
    ++on_torus;
    CHECK(bracket.eval(p).real() > 0.0);
  }
  CHECK(on_torus == 16);
  CHECK_THROWS_AS(build_F3(A, V, t0, 1), DomainError);
}
