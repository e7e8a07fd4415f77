#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "oscgap/control.hpp"
#include "oscgap/error.hpp"

using namespace oscgap;

namespace {

const WickSymbol H1 = WickSymbol::monomial({1, 0}, {1, 0}, 1.0);
const WickSymbol H2 = WickSymbol::monomial({0, 1}, {0, 1}, 1.0);
const WickSymbol V_AL2 = WickSymbol::monomial({1, 0}, {0, 1}, 1.0) + WickSymbol::monomial({0, 1}, {1, 0}, 1.0);

FrequencyVector w11() { return FrequencyVector::parse({"1", "1"}); }
FrequencyVector w12() { return FrequencyVector::parse({"1", "2"}); }

double harmonic(const std::vector<double>& w, const PhasePoint& p) {
  double h = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) h += w[j] * std::norm(p.zeta(static_cast<int>(j)));
  return h;
}

}  // namespace

TEST_CASE("sample_shell parametrizes the energy shell") {
  auto s1 = sample_shell(FrequencyVector::parse({"2"}), 1.5, 5, 12);
  REQUIRE(s1.size() == 12);
  for (const auto& p : s1.points) CHECK(std::abs(p.z[0] * p.z[0] + p.z[1] * p.z[1] - 2 * 1.5 / 2) < 1e-12);

  for (const auto& w : {w11(), w12(), FrequencyVector::parse({"1", "2", "3"})}) {
    auto s = sample_shell(w, 1.0, 7, 6);
    CHECK(s.size() > 0);
    for (const auto& p : s.points) CHECK(std::abs(harmonic(w.values(), p) - 1.0) <= 1e-10);
  }

  auto s = sample_shell(w11(), 1.0, 11, 16);
  int torus1 = 0, torus2 = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.actions[i][0] == 0.0) ++torus1;
    if (s.actions[i][1] == 0.0) ++torus2;
  }
  CHECK(torus1 == 16);
  CHECK(torus2 == 16);
  CHECK(s.size() == 9 * 16 * 16 + 2 * 16);
  // deterministic
  auto again = sample_shell(w11(), 1.0, 11, 16);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(again.points[i].z == s.points[i].z);

  CHECK_THROWS_AS(sample_shell(w11(), 1.0, 0, 4), DomainError);
  CHECK_THROWS_AS(sample_shell(w11(), 1.0, 3, 0), DomainError);
  CHECK_THROWS_AS(sample_shell(w11(), -1.0, 3, 3), DomainError);
}

TEST_CASE("zero_set") {
  auto s = sample_shell(w11(), 1.0, 11, 16);
  auto z = zero_set(s, H1, 1e-3);
  CHECK(z.size() == 16);
  for (const auto& p : z) CHECK(std::norm(p.zeta(0)) <= 1e-3);

  CHECK(zero_set(s, WickSymbol::constant(2, 1.0), 1e-3).empty());
  CHECK(zero_set(s, H1, 0.0).size() == 16);

  CHECK_THROWS_AS(zero_set(s, H1 - WickSymbol::constant(2, 0.5), 1e-3), ScenarioError);
  CHECK_THROWS_AS(zero_set(s, WickSymbol::zeta(2, 0), 1e-3), DomainError);
}

TEST_CASE("integrate_flow") {
  const std::vector<double> w{1.0, 1.0};
  const auto H = H1 + H2;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto z0 = testing::random_point(rng, 2);
    auto tr = integrate_flow(H, z0, 1.0, 1e-3, w);
    CHECK(tr.halvings == 0);
    CHECK(std::abs(tr.t.back() - 1.0) < 1e-12);
    const auto exact = testing::rotate_point(z0, {1.0, 1.0});
    for (std::size_t i = 0; i < exact.z.size(); ++i) CHECK(std::abs(tr.z.back().z[i] - exact.z[i]) < 1e-8);
  }

  const auto z0 = PhasePoint({0.3, -0.2, 0.7, 0.1});
  auto still = integrate_flow(WickSymbol::constant(2, 3.0), z0, 2.0, 0.1);
  for (const auto& p : still.z) CHECK(p.z == z0.z);

  // AL2 from the zero torus: ζ₁(t) = cos t ζ₁ − i sin t ζ₂, so |ζ₁|² = sin²t |ζ₂|²
  const Complex zeta0[2] = {0.0, std::exp(Complex(0, 0.4))};
  const auto start = PhasePoint::from_zeta(zeta0);
  auto tr = integrate_flow(V_AL2, start, 0.5, 1e-3, w);
  CHECK(tr.drift_V < 1e-10);
  CHECK(tr.drift_H < 1e-10);
  for (std::size_t k = 0; k < tr.t.size(); k += 50) {
    const double t = tr.t[k];
    CHECK(std::abs(std::norm(tr.z[k].zeta(0)) - std::pow(std::sin(t), 2)) < 1e-10);
  }
  // leading-order t² growth from finite differences on the trajectory
  const double h = tr.dt;
  const double f0 = std::norm(tr.z[0].zeta(0)), f1 = std::norm(tr.z[1].zeta(0)), f2 = std::norm(tr.z[2].zeta(0));
  CHECK(std::abs((f2 - 2 * f1 + f0) / (h * h) - 2.0 * std::norm(zeta0[1])) < 1e-4);

  // stiff quartic flow cannot meet the drift bound with three halvings
  const auto stiff = WickSymbol::monomial({3, 0}, {3, 0}, 1e4);
  CHECK_THROWS_AS(integrate_flow(stiff, z0, 1.0, 0.5), NumericError);
  CHECK_THROWS_AS(integrate_flow(V_AL2, z0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(integrate_flow(WickSymbol::zeta(2, 0), z0, 1.0, 0.1), DomainError);
}

TEST_CASE("check_control on AL2, AL2 without V and the 1:2 oscillator") {
  ControlOptions o;
  auto al2 = check_control(H1, V_AL2, w11(), o);
  CHECK(al2.satisfied);
  CHECK_FALSE(al2.invariance_flag);
  CHECK(al2.eps0 > 0.0);
  CHECK(al2.T1 > 0.0);
  CHECK(al2.T1 < 1.0);
  CHECK(al2.zero_set_size == 16);
  REQUIRE(al2.sensitivity.size() == 2);
  for (const auto& [m, n, sat] : al2.sensitivity) {
    CHECK(n == 16);
    CHECK(sat);
  }
  // exit time from |ζ₁(t)|² = sin² t > tol on the unit torus
  CHECK(std::abs(al2.T1 - std::asin(std::sqrt(1e-3))) < 2 * o.dt);
  // eps0 = ∫₀^{T1} sin²τ dτ
  CHECK(std::abs(al2.eps0 - (al2.T1 / 2 - std::sin(2 * al2.T1) / 4)) < 1e-6);

  auto v0 = check_control(H1, WickSymbol(2), w11(), o);
  CHECK(v0.invariance_flag);
  CHECK_FALSE(v0.satisfied);

  // monotone in T_max
  ControlOptions shorter = o;
  shorter.T_max = 0.02;
  CHECK_FALSE(check_control(H1, V_AL2, w11(), shorter).satisfied);
  for (double T : {0.5, 2.0, 8.0}) {
    ControlOptions longer = o;
    longer.T_max = T;
    CHECK(check_control(H1, V_AL2, w11(), longer).satisfied);
  }

  // ω=(1,2): no resonant monomial of degree ≤ 6 has α₁ = 0, β₁ = 1
  const auto w = w12();
  const auto module = resonance_module(w);
  int resonant = 0;
  for (int a1 = 0; a1 <= 6; ++a1)
    for (int a2 = 0; a2 <= 6; ++a2)
      for (int b1 = 0; b1 <= 6; ++b1)
        for (int b2 = 0; b2 <= 6; ++b2) {
          if (a1 + a2 + b1 + b2 > 6) continue;
          const long long k[2] = {b1 - a1, b2 - a2};
          if (!is_resonant(module, k)) continue;
          ++resonant;
          CHECK_FALSE((a1 == 0 && b1 == 1));
        }
  CHECK(resonant > 10);
  const auto Vres = WickSymbol::monomial({2, 0}, {0, 1}, 1.0) + WickSymbol::monomial({0, 1}, {2, 0}, 1.0);
  CHECK(average(Vres, module) == Vres);
  auto nr = check_control(H1, Vres + H1 * H2, w, o);
  CHECK(nr.invariance_flag);
  CHECK_FALSE(nr.satisfied);
  // NR12: V is nonresonant and averages to 0
  auto nr12 = check_control(H1, average(V_AL2, module), w, o);
  CHECK(nr12.invariance_flag);
  CHECK_FALSE(nr12.satisfied);

  // vacuous when ⟨A⟩ is positive everywhere
  auto pos = check_control(WickSymbol::constant(2, 1.0), V_AL2, w11(), o);
  CHECK(pos.satisfied);
  CHECK(pos.zero_set_size == 0);
  CHECK(pos.eps0 > 0.0);
}

TEST_CASE("check_strong") {
  auto s = sample_shell(w11(), 1.0, 11, 16);
  auto zeros = zero_set(s, H1, 1e-3);
  auto control = check_control(H1, V_AL2, w11());
  auto strong = check_strong(H1, V_AL2, zeros, control);
  CHECK_FALSE(strong.holds);
  CHECK(control.satisfied);
  CHECK(strong.min_abs_bracket < 1e-12);
  CHECK(strong.relation == "strong fails, control holds");

  CHECK_FALSE(check_strong(H1, H1, zeros).holds);

  // d=1, A = ξ and V = x give {A,V} = 1
  const double r = 1.0 / std::sqrt(2.0);
  const auto x = (WickSymbol::zeta(1, 0) + WickSymbol::zeta_bar(1, 0)) * Complex(r, 0);
  const auto xi = (WickSymbol::zeta(1, 0) - WickSymbol::zeta_bar(1, 0)) * Complex(0, -r);
  std::vector<PhasePoint> pts{PhasePoint({1.0, 0.0}), PhasePoint({-1.0, 0.0})};
  auto syn = check_strong(xi, x, pts);
  CHECK(syn.holds);
  CHECK(std::abs(syn.min_abs_bracket - 1.0) < 1e-12);
  ControlReport failed;
  CHECK_THROWS_AS(check_strong(xi, x, pts, failed), Error);
}

TEST_CASE("shell_extrema") {
  auto s = sample_shell(w11(), 1.0, 11, 8);
  auto e = shell_extrema(H1, s);
  CHECK(std::abs(e.A_minus) < 1e-14);
  CHECK(std::abs(e.A_plus - 1.0) < 1e-14);
  auto c = shell_extrema(WickSymbol::constant(2, 0.7), s);
  CHECK(std::abs(c.A_minus - 0.7) < 1e-14);
  CHECK(std::abs(c.A_plus - 0.7) < 1e-14);
  // I(1−I) peaks at 1/4; an even action grid misses the peak and refinement recovers it
  auto even = sample_shell(w11(), 1.0, 10, 4);
  auto p = shell_extrema(H1 * H2, even);
  CHECK(std::abs(p.A_plus - 0.25) < 1e-4);
  CHECK(p.refinements >= 1);
  for (const auto& z : even.points) {
    const double a = (H1 * H2).eval(z).real();
    CHECK(a >= p.A_minus - 1e-15);
    CHECK(a <= p.A_plus + 1e-15);
  }
}
