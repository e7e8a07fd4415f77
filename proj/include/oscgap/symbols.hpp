#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "oscgap/error.hpp"
#include "oscgap/frequencies.hpp"
#include "oscgap/scalar.hpp"
#include "oscgap/wick.hpp"

namespace oscgap {

/// Real gradient (∂_x a, ∂_ξ a) of a real Wick symbol at z.
struct Gradient {
  std::vector<double> dx;
  std::vector<double> dxi;
};

template <class S>
Gradient grad(const WickPolynomial<S>& a, const PhasePoint& z) {
  bool real;
  if constexpr (ScalarOps<S>::exact)
    real = a.is_real();
  else
    real = a.is_real_approx(1e-12);
  if (!real) throw DomainError("grad requires a real-valued symbol");
  const int d = a.dim();
  Gradient g{std::vector<double>(static_cast<std::size_t>(d)), std::vector<double>(static_cast<std::size_t>(d))};
  const double r = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < d; ++j) {
    const Complex dz = a.derivative_zeta(j).eval(z);
    const Complex dzb = a.derivative_zeta_bar(j).eval(z);
    g.dx[static_cast<std::size_t>(j)] = ((dz + dzb) * r).real();
    g.dxi[static_cast<std::size_t>(j)] = (Complex(0, 1) * (dz - dzb) * r).real();
  }
  return g;
}

/// {a,b} = ∂_ξa·∂_xb − ∂_xa·∂_ξb = i Σ_j (∂_{ζ_j}a ∂_{ζ̄_j}b − ∂_{ζ̄_j}a ∂_{ζ_j}b),
/// so that {H,f} is the derivative of f along the flow of H.
template <class S>
WickPolynomial<S> poisson(const WickPolynomial<S>& a, const WickPolynomial<S>& b) {
  a.check_dim(b);
  WickPolynomial<S> out(a.dim());
  for (int j = 0; j < a.dim(); ++j) {
    out += a.derivative_zeta(j) * b.derivative_zeta_bar(j);
    out -= a.derivative_zeta_bar(j) * b.derivative_zeta(j);
  }
  return out * ScalarOps<S>::imag_unit();
}

namespace detail {

inline Rational falling(int n, int k) {
  Rational r(1);
  for (int i = 0; i < k; ++i) r *= n - i;
  return r;
}

inline Rational factorial(int n) { return falling(n, n); }

}  // namespace detail

/// Weyl–Moyal product in Wick coordinates:
/// a♯b = Σ_{p,q} (ħ/2)^{|p|+|q|} (−1)^{|q|}/(p! q!) (∂_ζ^p ∂_ζ̄^q a)(∂_ζ̄^p ∂_ζ^q b).
/// Terminates on polynomials; ζ♯ζ̄ − ζ̄♯ζ = ħ.
template <class S>
WickPolynomial<S> moyal(const WickPolynomial<S>& a, const WickPolynomial<S>& b, const S& hbar) {
  using Ops = ScalarOps<S>;
  a.check_dim(b);
  const int d = a.dim();
  const S h2 = hbar * Ops::from_rational(Rational(1, 2));
  WickPolynomial<S> out(d);

  struct Piece {
    S factor;
    int alpha;
    int beta;
  };
  std::vector<S> hpow{Ops::one()};
  auto power = [&](int n) {
    while (static_cast<int>(hpow.size()) <= n) hpow.push_back(hpow.back() * h2);
    return hpow[static_cast<std::size_t>(n)];
  };

  std::vector<std::vector<Piece>> per_mode(static_cast<std::size_t>(d));
  for (const auto& [ka, ca] : a.terms()) {
    for (const auto& [kb, cb] : b.terms()) {
      for (int j = 0; j < d; ++j) {
        const int al = a.alpha(ka, j), be = a.beta(ka, j);
        const int ga = b.alpha(kb, j), de = b.beta(kb, j);
        auto& pieces = per_mode[static_cast<std::size_t>(j)];
        pieces.clear();
        for (int p = 0; p <= std::min(al, de); ++p)
          for (int q = 0; q <= std::min(be, ga); ++q) {
            Rational c = detail::falling(al, p) * detail::falling(be, q) * detail::falling(de, p) *
                         detail::falling(ga, q) / (detail::factorial(p) * detail::factorial(q));
            if (q % 2 == 1) c = -c;
            pieces.push_back({Ops::from_rational(c) * power(p + q), al - p + ga - q, be - q + de - p});
          }
      }
      // Cartesian product over modes.
      typename WickPolynomial<S>::Key key(2 * static_cast<std::size_t>(d));
      std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
      const S base = ca * cb;
      while (true) {
        S c = base;
        for (int j = 0; j < d; ++j) {
          const auto& pc = per_mode[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
          c *= pc.factor;
          key[static_cast<std::size_t>(j)] = pc.alpha;
          key[static_cast<std::size_t>(d + j)] = pc.beta;
        }
        out.add_term(key, c);
        int j = 0;
        while (j < d && ++idx[static_cast<std::size_t>(j)] == per_mode[static_cast<std::size_t>(j)].size()) {
          idx[static_cast<std::size_t>(j)] = 0;
          ++j;
        }
        if (j == d) break;
      }
    }
  }
  return out;
}

/// [a,b]_ħ = a♯b − b♯a.
template <class S>
WickPolynomial<S> commutator_h(const WickPolynomial<S>& a, const WickPolynomial<S>& b, const S& hbar) {
  return moyal(a, b, hbar) - moyal(b, a, hbar);
}

/// Sub-polynomial of monomials with β − α = k (no normalization).
template <class S>
WickPolynomial<S> mode_part(const WickPolynomial<S>& a, std::span<const long long> k) {
  if (static_cast<int>(k.size()) != a.dim()) throw DomainError("mode index dimension mismatch");
  return a.filter([&](const auto& key) {
    for (int j = 0; j < a.dim(); ++j)
      if (a.beta(key, j) - a.alpha(key, j) != k[static_cast<std::size_t>(j)]) return false;
    return true;
  });
}

/// Torus-Fourier coefficient a_k = ∫_{T^d} a∘Φ_τ e^{−ik·τ} dτ, so that Σ_k a_k/(2π)^d = a.
inline WickSymbol fourier_mode(const WickSymbol& a, std::span<const long long> k) {
  return mode_part(a, k) * Complex(std::pow(2.0 * std::numbers::pi, a.dim()), 0.0);
}

/// Flow average ⟨a⟩: keeps the monomials whose frequency β − α lies in Λ_ω.
template <class S>
WickPolynomial<S> average(const WickPolynomial<S>& a, const ResonanceModule& module) {
  if (module.dim != a.dim()) throw DomainError("resonance module dimension mismatch");
  return a.filter([&](const auto& key) {
    const auto f = a.frequency(key);
    return is_resonant(module, f);
  });
}

/// a∘Φ_τ: each monomial picks up the phase e^{i(β−α)·τ}.
inline WickSymbol flow_pullback(const WickSymbol& a, std::span<const double> tau) {
  if (static_cast<int>(tau.size()) != a.dim()) throw DomainError("τ dimension mismatch");
  WickSymbol out(a.dim());
  for (const auto& [k, c] : a.terms()) {
    double phase = 0.0;
    for (int j = 0; j < a.dim(); ++j)
      phase += (a.beta(k, j) - a.alpha(k, j)) * tau[static_cast<std::size_t>(j)];
    out.add_term(k, c * std::polar(1.0, phase));
  }
  return out;
}

/// Pullback along φ_t^H, i.e. τ = tω.
inline WickSymbol flow_pullback_time(const WickSymbol& a, const FrequencyVector& omega, double t) {
  std::vector<double> tau(omega.values());
  for (auto& x : tau) x *= t;
  return flow_pullback(a, tau);
}

/// Exact coefficient conversion for frequencies given as rationals.
inline std::vector<GaussRational> exact_omega(const FrequencyVector& omega) {
  std::vector<GaussRational> out;
  for (const auto& q : omega.rationals()) out.emplace_back(q);
  return out;
}

inline std::vector<Complex> complex_omega(const FrequencyVector& omega) {
  std::vector<Complex> out;
  for (double w : omega.values()) out.emplace_back(w, 0.0);
  return out;
}

/// Real and imaginary parts of a complex scalar coerced into S.
template <class S>
S scalar_from_double(double x) {
  if constexpr (ScalarOps<S>::exact) {
    return S(Rational(x));
  } else {
    return S(x, 0.0);
  }
}

}  // namespace oscgap
