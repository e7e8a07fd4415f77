#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oscgap/error.hpp"
#include "oscgap/frequencies.hpp"
#include "oscgap/symbols.hpp"
#include "oscgap/wick.hpp"

namespace oscgap {

template <class S>
struct CohomologySolution {
  WickPolynomial<S> f;
  /// {H,f} + ⟨g⟩ − g; the zero symbol in exact arithmetic.
  WickPolynomial<S> residual;
  /// min |ω·(β−α)| over the nonresonant monomials that were divided.
  double smallest_denominator = 0.0;
};

namespace detail {

template <class S>
std::vector<S> omega_as(const FrequencyVector& omega) {
  if constexpr (ScalarOps<S>::exact) {
    return exact_omega(omega);
  } else {
    return complex_omega(omega);
  }
}

template <class S>
S omega_dot(const FrequencyVector& omega, const std::vector<long long>& k) {
  if constexpr (ScalarOps<S>::exact) {
    return S(omega.dot_exact(k));
  } else {
    return S(omega.dot(k), 0.0);
  }
}

}  // namespace detail

/// Solves {H, f} = g − ⟨g⟩ monomial by monomial, f_{αβ} = g_{αβ}/(i ω·(β−α)),
/// with the gauge ⟨f⟩ = 0.
template <class S>
CohomologySolution<S> solve_cohomological(const WickPolynomial<S>& g, const FrequencyVector& omega,
                                          const ResonanceModule& module) {
  if (!omega.is_exact() || module.approximate)
    throw DomainError("cohomological equation needs exact-mode frequencies (denominators uncertifiable)");
  if (omega.dim() != g.dim() || module.dim != g.dim()) throw DomainError("dimension mismatch in cohomological equation");
  using Ops = ScalarOps<S>;
  CohomologySolution<S> sol{WickPolynomial<S>(g.dim()), WickPolynomial<S>(g.dim()), 0.0};
  bool first = true;
  for (const auto& [key, c] : g.terms()) {
    const auto k = g.frequency(key);
    if (is_resonant(module, k)) continue;
    const S m = detail::omega_dot<S>(omega, k);
    const double mag = std::abs(omega.dot(k));
    sol.smallest_denominator = first ? mag : std::min(sol.smallest_denominator, mag);
    first = false;
    sol.f.add_term(key, c / (Ops::imag_unit() * m));
  }
  const auto H = WickPolynomial<S>::harmonic(detail::omega_as<S>(omega));
  sol.residual = poisson(H, sol.f) + average(g, module) - g;
  return sol;
}

/// Explicit solution for ω = c(1,…,1): f = −(1/T)∫₀^T∫₀^t (g − ⟨g⟩)∘φ_s ds dt with
/// T = 2π/c, integrated in closed form on each monomial, then gauge-projected.
template <class S>
WickPolynomial<S> periodic_solution(const WickPolynomial<S>& g, const FrequencyVector& omega) {
  if (!omega.is_exact()) throw DomainError("periodic solution needs exact-mode frequencies");
  if (omega.dim() != g.dim()) throw DomainError("dimension mismatch in periodic solution");
  const auto& w = omega.rationals();
  for (const auto& x : w)
    if (x != w.front()) throw DomainError("periodic solution needs ω proportional to (1,…,1)");
  using Ops = ScalarOps<S>;
  const auto module = resonance_module(omega);
  WickPolynomial<S> f(g.dim());
  for (const auto& [key, c] : g.terms()) {
    const auto k = g.frequency(key);
    long long n = 0;
    for (long long x : k) n += x;
    if (n == 0) continue;  // resonant part, removed with ⟨g⟩
    // Along the flow the monomial picks up e^{ims}, m = ω·(β−α). With
    // I(t) = ∫₀^t e^{ims} ds = (e^{imt} − 1)/(im) one gets
    // (1/T)∫₀^T I dt = (e^{imT} − 1)/(T (im)²) − 1/(im), and e^{imT} = 1.
    const S im = Ops::imag_unit() * detail::omega_dot<S>(omega, k);
    const S boundary = Ops::zero();  // e^{imT} − 1
    const S outer = boundary - Ops::one() / im;
    f.add_term(key, -(c * outer));
  }
  // gauge projection: drop any resonant remainder
  return f - average(f, module);
}

template <class S>
struct CohomologicalPair {
  WickPolynomial<S> F1;
  WickPolynomial<S> F2;
};

/// F₁, F₂ with {F₁,H} + V = ⟨V⟩ and {F₂,H} + A = ⟨A⟩.
template <class S>
CohomologicalPair<S> build_F12(const WickPolynomial<S>& A, const WickPolynomial<S>& V, const FrequencyVector& omega,
                               const ResonanceModule& module) {
  auto real = [](const WickPolynomial<S>& a) {
    if constexpr (ScalarOps<S>::exact)
      return a.is_real();
    else
      return a.is_real_approx(1e-12);
  };
  if (!real(A) || !real(V)) throw DomainError("build_F12 needs real A and V");
  return {solve_cohomological(V, omega, module).f, solve_cohomological(A, omega, module).f};
}

template <class S>
struct F3Result {
  WickPolynomial<S> F3;
  /// ℓ¹ norm of the last retained term of the bracket series.
  double tail_indicator = 0.0;
  /// Every bracket iterate Poisson-commutes with H (so ⟨F₃⟩ = F₃ must hold).
  bool h_invariant = false;
  std::optional<std::string> warning;
};

/// F₃ = Σ_{j=0}^{J} t₀^{j+2}/((j+2)(j+1)j!) Ad_{⟨V⟩}^j(⟨A⟩) with Ad_V(a) = {V,a}: the double
/// time integral ∫₀^{t₀}∫₀^t ⟨A⟩∘φ_τ^{⟨V⟩} dτ dt truncated at order J.
template <class S>
F3Result<S> build_F3(const WickPolynomial<S>& avgA, const WickPolynomial<S>& avgV, const S& t0, int J,
                     const std::vector<S>& omega = {}, double tail_threshold = 1e-6) {
  if (J < 2) throw DomainError("build_F3 needs J >= 2");
  avgA.check_dim(avgV);
  using Ops = ScalarOps<S>;
  F3Result<S> out;
  out.F3 = WickPolynomial<S>(avgA.dim());
  WickPolynomial<S> iterate = avgA;
  S tpow = t0 * t0;
  Rational jfact(1);
  std::optional<WickPolynomial<S>> H;
  if (!omega.empty()) H = WickPolynomial<S>::harmonic(omega);
  bool invariant = H.has_value();
  for (int j = 0; j <= J; ++j) {
    if (j > 0) {
      iterate = poisson(avgV, iterate);
      tpow *= t0;
      jfact *= j;
    }
    if (H && !poisson(*H, iterate).is_zero()) invariant = false;
    const WickPolynomial<S> term = iterate * (tpow * Ops::from_rational(Rational(1) / (Rational((j + 2) * (j + 1)) * jfact)));
    out.F3 += term;
    if (j == J) out.tail_indicator = term.l1_norm();
  }
  out.h_invariant = invariant;
  if (out.tail_indicator > tail_threshold * std::max(1.0, out.F3.l1_norm()))
    out.warning = "F3 series tail indicator " + std::to_string(out.tail_indicator) + " above threshold";
  if (invariant && !poisson(*H, out.F3).is_zero())
    throw NumericError("F3 built from H-invariant iterates is not H-invariant");
  return out;
}

}  // namespace oscgap
