#pragma once

#include <map>
#include <span>
#include <vector>

#include "oscgap/frequencies.hpp"
#include "oscgap/scalar.hpp"
#include "oscgap/wick.hpp"

namespace oscgap {

/// Finite sum a(z) = Σ c_j e^{i w_j·z}, with w_j interleaved like PhasePoint.
class PlaneWaveSymbol {
 public:
  using Wave = std::vector<double>;
  using TermMap = std::map<Wave, Complex>;

  PlaneWaveSymbol() = default;
  explicit PlaneWaveSymbol(int dim);

  static PlaneWaveSymbol constant(int dim, Complex c);
  static PlaneWaveSymbol wave(const Wave& w, Complex c);

  int dim() const { return dim_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  void add_term(Wave w, Complex c);
  Complex coefficient(const Wave& w) const;

  Complex eval(const PhasePoint& z) const;
  /// Terms pair up as (w, c), (−w, c̄) within a relative tolerance.
  bool is_real(double rel_tol = 1e-12) const;
  PlaneWaveSymbol conj() const;
  double l1_norm() const;
  /// Drops terms with |c| ≤ tol.
  PlaneWaveSymbol pruned(double tol) const;

  PlaneWaveSymbol& operator+=(const PlaneWaveSymbol& o);
  PlaneWaveSymbol& operator-=(const PlaneWaveSymbol& o);
  PlaneWaveSymbol& operator*=(Complex s);
  friend PlaneWaveSymbol operator+(PlaneWaveSymbol a, const PlaneWaveSymbol& b) { return a += b; }
  friend PlaneWaveSymbol operator-(PlaneWaveSymbol a, const PlaneWaveSymbol& b) { return a -= b; }
  friend PlaneWaveSymbol operator*(PlaneWaveSymbol a, Complex s) { return a *= s; }
  friend PlaneWaveSymbol operator*(Complex s, PlaneWaveSymbol a) { return a *= s; }
  /// Pointwise product: frequencies add, coefficients multiply.
  friend PlaneWaveSymbol operator*(const PlaneWaveSymbol& a, const PlaneWaveSymbol& b);

  void check_dim(const PlaneWaveSymbol& o) const;

 private:
  int dim_ = 1;
  TermMap terms_;
};

/// ς(w, w') = Σ_j (v_j u'_j − u_j v'_j) for w_j = (u_j, v_j).
double symplectic(std::span<const double> w, std::span<const double> wp);

/// e_w ♯ e_{w'} = e^{(iħ/2) ς(w,w')} e_{w+w'}.
PlaneWaveSymbol moyal(const PlaneWaveSymbol& a, const PlaneWaveSymbol& b, double hbar);
PlaneWaveSymbol commutator_h(const PlaneWaveSymbol& a, const PlaneWaveSymbol& b, double hbar);
/// {e_w, e_{w'}} = −ς(w,w') e_{w+w'}.
PlaneWaveSymbol poisson(const PlaneWaveSymbol& a, const PlaneWaveSymbol& b);
/// a∘Φ_τ: each block (u_j, v_j) is rotated by τ_j.
PlaneWaveSymbol flow_pullback(const PlaneWaveSymbol& a, std::span<const double> tau);

/// Σ_j |c_j| e^{s‖w_j‖}.
double norm_As(const PlaneWaveSymbol& a, double s);
/// Wick symbols are never in A_s; always throws.
double norm_As(const WickSymbol& a, double s);

struct ArhoNorm {
  double value = 0.0;
  /// Contribution of the outermost shell |k|∞ = Kmax.
  double tail = 0.0;
  int Kmax = 0;
  int quadrature_order = 0;
};

/// (2π)^{−d} Σ_{|k|∞≤Kmax} ‖a_k‖_s e^{ρ|k|₁}, with a_k from an equal-weight
/// torus quadrature of order N. Throws when tail > tail_tol·value.
ArhoNorm norm_Arho_s(const PlaneWaveSymbol& a, const FrequencyVector& omega, double rho, double s, int Kmax,
                     double tail_tol = 1e-6, int N = 64);

/// Torus-Fourier coefficient a_k by N-point quadrature in each angle.
PlaneWaveSymbol fourier_mode(const PlaneWaveSymbol& a, std::span<const long long> k, int N);

struct PlaneWaveAverage {
  PlaneWaveSymbol approximant;
  double error_estimate = 0.0;
  bool approximate = false;
  int order = 0;
  int d_omega = 0;

  Complex eval(const PhasePoint& z) const { return approximant.eval(z); }
};

/// Equal-weight quadrature of a∘Φ_τ over the minimal torus T_ω.
PlaneWaveAverage average_planewave_quadrature(const PlaneWaveSymbol& a, const FrequencyVector& omega, int N);

}  // namespace oscgap
