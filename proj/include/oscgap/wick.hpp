#pragma once

// Wick polynomials a(z) = Σ c_{αβ} ζ^α ζ̄^β in the complex coordinates
// ζ_j = (x_j + iξ_j)/√2. Phase points are stored block-wise as
// z = (x_1, ξ_1, x_2, ξ_2, ...).

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "oscgap/error.hpp"
#include "oscgap/scalar.hpp"

namespace oscgap {

using MultiIndex = std::vector<int>;

/// Point of ℝ^{2d}, interleaved as (x_1, ξ_1, ..., x_d, ξ_d).
struct PhasePoint {
  std::vector<double> z;

  PhasePoint() = default;
  explicit PhasePoint(std::vector<double> coords) : z(std::move(coords)) {}
  static PhasePoint zeros(int dim) { return PhasePoint(std::vector<double>(2 * static_cast<std::size_t>(dim), 0.0)); }

  int dim() const { return static_cast<int>(z.size() / 2); }
  double x(int j) const { return z[2 * static_cast<std::size_t>(j)]; }
  double xi(int j) const { return z[2 * static_cast<std::size_t>(j) + 1]; }
  double& x(int j) { return z[2 * static_cast<std::size_t>(j)]; }
  double& xi(int j) { return z[2 * static_cast<std::size_t>(j) + 1]; }
  Complex zeta(int j) const { return Complex(x(j), xi(j)) / std::sqrt(2.0); }

  static PhasePoint from_zeta(std::span<const Complex> zeta) {
    PhasePoint p = zeros(static_cast<int>(zeta.size()));
    for (std::size_t j = 0; j < zeta.size(); ++j) {
      p.z[2 * j] = std::sqrt(2.0) * zeta[j].real();
      p.z[2 * j + 1] = std::sqrt(2.0) * zeta[j].imag();
    }
    return p;
  }
};

template <class S>
class WickPolynomial {
 public:
  using Scalar = S;
  using Ops = ScalarOps<S>;
  /// (α_1..α_d, β_1..β_d)
  using Key = std::vector<int>;
  using TermMap = std::map<Key, S>;

  WickPolynomial() = default;
  explicit WickPolynomial(int dim) : dim_(dim) {
    if (dim < 1) throw DomainError("Wick polynomial needs d >= 1");
  }

  static WickPolynomial constant(int dim, const S& c) {
    WickPolynomial p(dim);
    p.add_term(Key(2 * static_cast<std::size_t>(dim), 0), c);
    return p;
  }
  static WickPolynomial monomial(const MultiIndex& alpha, const MultiIndex& beta, const S& c) {
    if (alpha.size() != beta.size()) throw DomainError("multi-index size mismatch");
    WickPolynomial p(static_cast<int>(alpha.size()));
    p.add_term(make_key(alpha, beta), c);
    return p;
  }
  static WickPolynomial zeta(int dim, int j) { return unit(dim, j, false); }
  static WickPolynomial zeta_bar(int dim, int j) { return unit(dim, j, true); }
  /// H = Σ ω_j ζ_j ζ̄_j.
  static WickPolynomial harmonic(const std::vector<S>& omega) {
    const int d = static_cast<int>(omega.size());
    WickPolynomial h(d);
    for (int j = 0; j < d; ++j) {
      MultiIndex e(static_cast<std::size_t>(d), 0);
      e[static_cast<std::size_t>(j)] = 1;
      h.add_term(make_key(e, e), omega[static_cast<std::size_t>(j)]);
    }
    return h;
  }

  static Key make_key(const MultiIndex& alpha, const MultiIndex& beta) {
    Key k(alpha);
    k.insert(k.end(), beta.begin(), beta.end());
    return k;
  }

  int dim() const { return dim_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  int alpha(const Key& k, int j) const { return k[static_cast<std::size_t>(j)]; }
  int beta(const Key& k, int j) const { return k[static_cast<std::size_t>(dim_ + j)]; }
  /// β − α, the torus-Fourier frequency of the monomial.
  std::vector<long long> frequency(const Key& k) const {
    std::vector<long long> f(static_cast<std::size_t>(dim_));
    for (int j = 0; j < dim_; ++j) f[static_cast<std::size_t>(j)] = beta(k, j) - alpha(k, j);
    return f;
  }

  void add_term(const Key& key, const S& c) {
    if (static_cast<int>(key.size()) != 2 * dim_) throw DomainError("monomial key has wrong dimension");
    if (Ops::is_zero(c)) return;
    auto [it, inserted] = terms_.try_emplace(key, c);
    if (!inserted) {
      it->second += c;
      if (Ops::is_zero(it->second)) terms_.erase(it);
    }
  }

  S coefficient(const MultiIndex& alpha, const MultiIndex& beta) const {
    auto it = terms_.find(make_key(alpha, beta));
    return it == terms_.end() ? Ops::zero() : it->second;
  }

  int degree() const {
    int deg = 0;
    for (const auto& [k, c] : terms_) deg = std::max(deg, std::accumulate(k.begin(), k.end(), 0));
    return deg;
  }

  /// Coefficient-wise test of a = ā, i.e. c_{βα} = conj(c_{αβ}).
  bool is_real() const {
    for (const auto& [k, c] : terms_) {
      auto it = terms_.find(swapped(k));
      const S other = it == terms_.end() ? Ops::zero() : it->second;
      if (!(other == Ops::conj(c))) return false;
    }
    return true;
  }

  /// Same test with a tolerance relative to the coefficient ℓ¹ norm.
  bool is_real_approx(double rel_tol) const {
    const double scale = std::max(1.0, l1_norm());
    for (const auto& [k, c] : terms_) {
      auto it = terms_.find(swapped(k));
      const S other = it == terms_.end() ? Ops::zero() : it->second;
      if (Ops::magnitude(other - Ops::conj(c)) > rel_tol * scale) return false;
    }
    return true;
  }

  /// Pointwise complex conjugate ā.
  WickPolynomial conj() const {
    WickPolynomial out(dim_);
    for (const auto& [k, c] : terms_) out.add_term(swapped(k), Ops::conj(c));
    return out;
  }

  /// (a + ā)/2 and (a − ā)/(2i).
  WickPolynomial real_part() const { return ((*this) + conj()) * half(); }
  WickPolynomial imag_part() const {
    return ((*this) - conj()) * (half() / Ops::imag_unit());
  }

  double l1_norm() const {
    double s = 0.0;
    for (const auto& [k, c] : terms_) s += Ops::magnitude(c);
    return s;
  }

  Complex eval(const PhasePoint& p) const {
    if (p.dim() != dim_) throw DomainError("dimension mismatch in eval");
    std::vector<Complex> zeta(static_cast<std::size_t>(dim_));
    for (int j = 0; j < dim_; ++j) zeta[static_cast<std::size_t>(j)] = p.zeta(j);
    return eval_zeta(zeta);
  }

  Complex eval_zeta(std::span<const Complex> zeta) const {
    Complex sum{};
    for (const auto& [k, c] : terms_) {
      Complex m = Ops::to_complex(c);
      for (int j = 0; j < dim_; ++j) {
        const auto zj = zeta[static_cast<std::size_t>(j)];
        for (int a = 0; a < alpha(k, j); ++a) m *= zj;
        for (int b = 0; b < beta(k, j); ++b) m *= std::conj(zj);
      }
      sum += m;
    }
    return sum;
  }

  WickPolynomial derivative_zeta(int j) const { return derivative(j, false); }
  WickPolynomial derivative_zeta_bar(int j) const { return derivative(j, true); }

  template <class F>
  WickPolynomial filter(F&& keep) const {
    WickPolynomial out(dim_);
    for (const auto& [k, c] : terms_)
      if (keep(k)) out.terms_.emplace(k, c);
    return out;
  }

  template <class T, class F>
  WickPolynomial<T> map_coefficients(F&& f) const {
    WickPolynomial<T> out(dim_);
    for (const auto& [k, c] : terms_) out.add_term(k, f(c));
    return out;
  }

  WickPolynomial& operator+=(const WickPolynomial& o) {
    check_dim(o);
    for (const auto& [k, c] : o.terms_) add_term(k, c);
    return *this;
  }
  WickPolynomial& operator-=(const WickPolynomial& o) {
    check_dim(o);
    for (const auto& [k, c] : o.terms_) add_term(k, -c);
    return *this;
  }
  WickPolynomial& operator*=(const S& s) {
    if (Ops::is_zero(s)) {
      terms_.clear();
      return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      it = Ops::is_zero(it->second) ? terms_.erase(it) : std::next(it);
    }
    return *this;
  }
  friend WickPolynomial operator+(WickPolynomial a, const WickPolynomial& b) { return a += b; }
  friend WickPolynomial operator-(WickPolynomial a, const WickPolynomial& b) { return a -= b; }
  friend WickPolynomial operator-(WickPolynomial a) { return a *= -Ops::one(); }
  friend WickPolynomial operator*(WickPolynomial a, const S& s) { return a *= s; }
  friend WickPolynomial operator*(const S& s, WickPolynomial a) { return a *= s; }

  /// Pointwise product.
  friend WickPolynomial operator*(const WickPolynomial& a, const WickPolynomial& b) {
    a.check_dim(b);
    WickPolynomial out(a.dim_);
    for (const auto& [ka, ca] : a.terms_)
      for (const auto& [kb, cb] : b.terms_) {
        Key k(ka.size());
        for (std::size_t i = 0; i < k.size(); ++i) k[i] = ka[i] + kb[i];
        out.add_term(k, ca * cb);
      }
    return out;
  }

  friend bool operator==(const WickPolynomial& a, const WickPolynomial& b) {
    return a.dim_ == b.dim_ && a.terms_ == b.terms_;
  }

  void check_dim(const WickPolynomial& o) const {
    if (o.dim_ != dim_) throw DomainError("dimension mismatch between symbols");
  }

 private:
  static S half() { return Ops::from_rational(Rational(1, 2)); }

  static WickPolynomial unit(int dim, int j, bool bar) {
    MultiIndex a(static_cast<std::size_t>(dim), 0), b(static_cast<std::size_t>(dim), 0);
    (bar ? b : a)[static_cast<std::size_t>(j)] = 1;
    return monomial(a, b, Ops::one());
  }

  Key swapped(const Key& k) const {
    Key s(k.size());
    for (int j = 0; j < dim_; ++j) {
      s[static_cast<std::size_t>(j)] = beta(k, j);
      s[static_cast<std::size_t>(dim_ + j)] = alpha(k, j);
    }
    return s;
  }

  WickPolynomial derivative(int j, bool bar) const {
    if (j < 0 || j >= dim_) throw DomainError("derivative index out of range");
    WickPolynomial out(dim_);
    const auto slot = static_cast<std::size_t>(bar ? dim_ + j : j);
    for (const auto& [k, c] : terms_) {
      if (k[slot] == 0) continue;
      Key nk = k;
      nk[slot] -= 1;
      out.add_term(nk, c * Ops::from_int(k[slot]));
    }
    return out;
  }

  int dim_ = 1;
  TermMap terms_;
};

using WickSymbol = WickPolynomial<Complex>;
using ExactWickSymbol = WickPolynomial<GaussRational>;

/// Floating copy of an exact symbol.
inline WickSymbol to_floating(const ExactWickSymbol& a) {
  return a.map_coefficients<Complex>([](const GaussRational& c) { return ScalarOps<GaussRational>::to_complex(c); });
}

}  // namespace oscgap
