#pragma once

#include <random>
#include <vector>

#include "oscgap/planewave.hpp"
#include "oscgap/symbols.hpp"
#include "oscgap/wick.hpp"

namespace testing {

using namespace oscgap;

inline std::vector<int> random_index(std::mt19937_64& rng, int dim, int max_total) {
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  std::uniform_int_distribution<int> pick(0, dim - 1);
  std::uniform_int_distribution<int> total(0, max_total);
  for (int t = total(rng); t > 0; --t) ++idx[static_cast<std::size_t>(pick(rng))];
  return idx;
}

/// Random exact symbol with small integer-over-small-integer coefficients, total degree ≤ deg.
inline ExactWickSymbol random_exact(std::mt19937_64& rng, int dim, int deg, int nterms) {
  ExactWickSymbol a(dim);
  std::uniform_int_distribution<int> num(-5, 5), den(1, 4), split(0, 100);
  for (int t = 0; t < nterms; ++t) {
    std::vector<int> key = random_index(rng, 2 * dim, deg);
    a.add_term(key, GaussRational(Rational(num(rng), den(rng)), Rational(num(rng), den(rng))));
  }
  return a;
}

inline WickSymbol random_wick(std::mt19937_64& rng, int dim, int deg, int nterms) {
  WickSymbol a(dim);
  std::normal_distribution<double> g;
  for (int t = 0; t < nterms; ++t) a.add_term(random_index(rng, 2 * dim, deg), Complex(g(rng), g(rng)));
  return a;
}

/// Plane-wave symbol with integer frequencies in [−2, 2] per component.
inline PlaneWaveSymbol random_planewave(std::mt19937_64& rng, int dim, int nterms) {
  PlaneWaveSymbol a(dim);
  std::uniform_int_distribution<int> wi(-2, 2);
  std::normal_distribution<double> g;
  for (int t = 0; t < nterms; ++t) {
    PlaneWaveSymbol::Wave w(2 * static_cast<std::size_t>(dim));
    for (auto& x : w) x = wi(rng);
    a.add_term(w, Complex(g(rng), g(rng)));
  }
  return a;
}

inline PhasePoint random_point(std::mt19937_64& rng, int dim, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  PhasePoint z = PhasePoint::zeros(dim);
  for (auto& x : z.z) x = u(rng);
  return z;
}

/// Rotation of every (x_j, ξ_j) plane by angle τ_j, the oscillator flow map.
inline PhasePoint rotate_point(const PhasePoint& z, const std::vector<double>& tau) {
  PhasePoint out = z;
  for (int j = 0; j < z.dim(); ++j) {
    const double c = std::cos(tau[static_cast<std::size_t>(j)]), s = std::sin(tau[static_cast<std::size_t>(j)]);
    out.x(j) = c * z.x(j) + s * z.xi(j);
    out.xi(j) = -s * z.x(j) + c * z.xi(j);
  }
  return out;
}

}  // namespace testing
